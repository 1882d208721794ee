from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Tuple

Edge = Tuple[int, ...]


@dataclass
class ConflictHypergraph:
    """Minimal infeasible vertex sets of a set system, sorted by (size, ids)."""
    vertices: List[int]
    edges: List[Edge] = field(default_factory=list)

    def __post_init__(self):
        self.vertices = sorted(self.vertices)
        self.edges = sorted({tuple(sorted(e)) for e in self.edges}, key=lambda e: (len(e), e))

    @property
    def rank(self) -> int:
        return max((len(e) for e in self.edges), default=0)

    def edges_of_size(self, k: int) -> List[Edge]:
        return [e for e in self.edges if len(e) == k]

    @property
    def rank2_edges(self) -> List[Edge]:
        return self.edges_of_size(2)

    @property
    def higher_edges(self) -> List[Edge]:
        return [e for e in self.edges if len(e) >= 3]

    def counts_by_size(self) -> Dict[int, int]:
        return dict(sorted(Counter(len(e) for e in self.edges).items()))

    def replace(self, removed: Iterable[Edge], added: Iterable[Edge], new_vertices: Iterable[int] = ()) -> "ConflictHypergraph":
        gone = {tuple(sorted(e)) for e in removed}
        kept = [e for e in self.edges if e not in gone]
        return ConflictHypergraph(self.vertices + list(new_vertices), kept + list(added))

    def __repr__(self):
        return (f"<ConflictHypergraph(vertices={len(self.vertices)}, edges={len(self.edges)}, "
                f"rank={self.rank})>")


@dataclass
class SplitRecord:
    edge: Tuple[int, int]
    w: int
    k: int = 0
    removed: int = 0
    created: int = 0

    @property
    def delta(self) -> int:
        return self.removed - self.created
