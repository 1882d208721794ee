from dataclasses import dataclass, field
from typing import List, Sequence, Tuple

import numpy as np

Simplex = Tuple[int, ...]


@dataclass(eq=False)
class SimplicialPartition:
    """Vertices with coordinates and function values plus simplices as sorted vertex-id tuples."""
    points: np.ndarray
    values: np.ndarray
    simplices: List[Simplex]
    provenance: str = ""

    def __post_init__(self):
        self.points = np.array(self.points, dtype=float, ndmin=2)
        self.values = np.array(self.values, dtype=float).reshape(-1)
        self.simplices = [tuple(sorted(int(v) for v in s)) for s in self.simplices]

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])

    @property
    def num_vertices(self) -> int:
        return int(self.points.shape[0])

    @property
    def num_simplices(self) -> int:
        return len(self.simplices)

    def coords(self, simplex: Sequence[int]) -> np.ndarray:
        return self.points[list(simplex)]

    def bounding_box(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.points.min(axis=0), self.points.max(axis=0)

    def copy(self) -> "SimplicialPartition":
        return SimplicialPartition(self.points.copy(), self.values.copy(),
                                   list(self.simplices), self.provenance)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SimplicialPartition):
            return NotImplemented
        return (self.points.shape == other.points.shape
                and np.array_equal(self.points, other.points)
                and np.array_equal(self.values, other.values)
                and self.simplices == other.simplices
                and self.provenance == other.provenance)

    def __repr__(self):
        return (f"<SimplicialPartition(dim={self.dim}, vertices={self.num_vertices}, "
                f"simplices={self.num_simplices})>")


@dataclass
class SetSystem:
    ground_set: List[int]
    sets: List[Simplex] = field(default_factory=list)

    def __post_init__(self):
        seen = {}
        for s in self.sets:
            key = tuple(sorted(s))
            if not key:
                raise ValueError("empty set in set system")
            seen.setdefault(key, None)
        self.sets = list(seen)
        self.ground_set = sorted(self.ground_set)

    def is_feasible(self, subset) -> bool:
        """True if some set contains subset."""
        subset = set(subset)
        return any(subset.issubset(s) for s in self.sets)
