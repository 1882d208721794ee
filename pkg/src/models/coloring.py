from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Sequence, Tuple


@dataclass
class BlockingHypergraph:
    """Minimal blocking sets over simplex indices 0..num_simplices-1."""
    num_simplices: int
    edges: List[Tuple[int, ...]] = field(default_factory=list)

    def __post_init__(self):
        self.edges = sorted({tuple(sorted(e)) for e in self.edges}, key=lambda e: (len(e), e))

    @property
    def rank(self) -> int:
        return max((len(e) for e in self.edges), default=0)

    @property
    def rank2_edges(self) -> List[Tuple[int, ...]]:
        return [e for e in self.edges if len(e) == 2]

    def __repr__(self):
        return f"<BlockingHypergraph(simplices={self.num_simplices}, edges={len(self.edges)})>"


@dataclass
class Coloring:
    """gamma[i] in 1..q is the colour of simplex i."""
    q: int
    gamma: List[int]
    color_patterns: Dict[int, FrozenSet[int]] = field(default_factory=dict)

    @classmethod
    def from_gamma(cls, gamma: Sequence[int], simplices: Sequence[Sequence[int]]) -> "Coloring":
        """Relabel colours by first appearance in simplex order and derive the vertex patterns pi_v."""
        relabel: Dict[int, int] = {}
        for c in gamma:
            relabel.setdefault(c, len(relabel) + 1)
        canonical = [relabel[c] for c in gamma]
        patterns: Dict[int, set] = {}
        for c, s in zip(canonical, simplices):
            for v in s:
                patterns.setdefault(v, set()).add(c)
        return cls(q=len(relabel), gamma=canonical,
                   color_patterns={v: frozenset(p) for v, p in sorted(patterns.items())})

    def color_class(self, c: int) -> List[int]:
        return [i for i, g in enumerate(self.gamma) if g == c]

    def is_valid_for(self, edges) -> bool:
        """No edge is monochromatic."""
        return all(len({self.gamma[i] for i in e}) > 1 for e in edges)

    def __repr__(self):
        return f"<Coloring(q={self.q}, simplices={len(self.gamma)})>"
