from typing import Optional

import numpy as np

from src.geometry import barycentric_coordinates
from src.models.partition import SimplicialPartition

INSIDE_TOL = 1e-12


class PwlFunction:
    """f̂(x) = Σ λ_v f(v), with λ the barycentric coordinates of x in its simplex."""

    def __init__(self, partition: SimplicialPartition):
        self.partition = partition
        pts = partition.points
        self._lo = np.array([pts[list(s)].min(axis=0) for s in partition.simplices])
        self._hi = np.array([pts[list(s)].max(axis=0) for s in partition.simplices])

    @property
    def dim(self) -> int:
        return self.partition.dim

    def gradient(self, index: int) -> np.ndarray:
        """Gradient of the affine piece on simplex ``index``."""
        p = self.partition
        s = list(p.simplices[index])
        coords = p.points[s]
        edges = coords[1:] - coords[0]
        rise = p.values[s[1:]] - p.values[s[0]]
        return np.linalg.solve(edges, rise)

    def evaluate(self, x: np.ndarray, out_of_domain: float = np.nan) -> np.ndarray:
        """Evaluate f̂ at the rows of x; points outside every simplex get ``out_of_domain``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        result = np.full(len(x), out_of_domain, dtype=float)
        done = np.zeros(len(x), dtype=bool)
        order = np.argsort(x[:, 0], kind="stable")
        xs = x[order, 0]
        p = self.partition
        for i, s in enumerate(p.simplices):
            lo = np.searchsorted(xs, self._lo[i, 0] - INSIDE_TOL, side="left")
            hi = np.searchsorted(xs, self._hi[i, 0] + INSIDE_TOL, side="right")
            if lo >= hi:
                continue
            cand = order[lo:hi]
            cand = cand[~done[cand]]
            if cand.size == 0:
                continue
            box = np.all((x[cand] >= self._lo[i] - INSIDE_TOL) & (x[cand] <= self._hi[i] + INSIDE_TOL), axis=1)
            cand = cand[box]
            if cand.size == 0:
                continue
            lam = barycentric_coordinates(p.points[list(s)], x[cand])
            inside = lam.min(axis=1) >= -INSIDE_TOL
            hit = cand[inside]
            result[hit] = lam[inside] @ p.values[list(s)]
            done[hit] = True
        return result

    def locate(self, point: np.ndarray) -> Optional[int]:
        """Index of the first simplex containing point, or None."""
        point = np.asarray(point, dtype=float)
        p = self.partition
        for i, s in enumerate(p.simplices):
            if np.any(point < self._lo[i] - INSIDE_TOL) or np.any(point > self._hi[i] + INSIDE_TOL):
                continue
            lam = barycentric_coordinates(p.points[list(s)], point[None, :])[0]
            if lam.min() >= -INSIDE_TOL:
                return i
        return None
