from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Set, Tuple

import networkx as nx

from src.errors import ValidationError

Edge = Tuple[int, int]


def edge_key(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True)
class Biclique:
    """Disjoint vertex sets A and B; stored with the smaller part first (ties: smaller minimum first)."""
    A: Tuple[int, ...]
    B: Tuple[int, ...]

    def __post_init__(self):
        a, b = tuple(sorted(set(self.A))), tuple(sorted(set(self.B)))
        if not a or not b:
            raise ValidationError("biclique parts must be nonempty")
        if set(a) & set(b):
            raise ValidationError(f"biclique parts overlap: {sorted(set(a) & set(b))}")
        if (len(b), b[0]) < (len(a), a[0]):
            a, b = b, a
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)

    @property
    def covered_edges(self) -> List[Edge]:
        return sorted(edge_key(a, b) for a in self.A for b in self.B)

    def weight(self, weights: Dict[Edge, float]) -> float:
        return sum(weights.get(e, 0.0) for e in self.covered_edges)

    def is_valid_for(self, g: nx.Graph) -> bool:
        """Every pair (a, b) is an edge of g."""
        return all(g.has_edge(a, b) for a in self.A for b in self.B)

    def to_dict(self) -> dict:
        return {"A": list(self.A), "B": list(self.B)}


@dataclass
class BicliqueCover:
    bicliques: List[Biclique] = field(default_factory=list)
    num_host_edges: int = 0

    def __len__(self):
        return len(self.bicliques)

    def __iter__(self):
        return iter(self.bicliques)

    def covered(self) -> Set[Edge]:
        out: Set[Edge] = set()
        for b in self.bicliques:
            out.update(b.covered_edges)
        return out

    def uncovered(self, edges: Iterable[Edge]) -> List[Edge]:
        done = self.covered()
        return sorted(e for e in (edge_key(*e) for e in edges) if e not in done)

    def covers(self, g: nx.Graph) -> bool:
        """Union of covered edges equals E(g) and every biclique lives in g."""
        return (all(b.is_valid_for(g) for b in self.bicliques)
                and self.covered() == {edge_key(u, v) for u, v in g.edges})

    def to_dict(self) -> dict:
        return {"size": len(self.bicliques), "num_host_edges": self.num_host_edges,
                "bicliques": [b.to_dict() for b in self.bicliques]}

    @classmethod
    def from_dict(cls, data: dict) -> "BicliqueCover":
        return cls([Biclique(tuple(b["A"]), tuple(b["B"])) for b in data.get("bicliques", [])],
                   int(data.get("num_host_edges", 0)))

    def __repr__(self):
        return f"<BicliqueCover(size={len(self.bicliques)}, host_edges={self.num_host_edges})>"
