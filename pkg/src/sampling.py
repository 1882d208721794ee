"""Maximal Poisson-disk sampling inside a simplex.

A background grid with cell side r_cover/d (so every cell has diameter at
most r_cover/sqrt(d)) is laid over the bounding box of the simplex. Cells
that meet the simplex are active. Each round throws a fixed number of
uniform candidates into every active cell and accepts the first candidate
that lies inside the simplex and is farther than r_min from every sample.
Cells that received a sample are done; the others are split into 2^d
subcells, and subcells already covered by existing samples (or outside the
simplex) are dropped.

The number of active cells is bounded by a budget: a radius too small for
the simplex raises SizeLimit before any cell is built, and the bounding box
is scanned in chunks so only active cells are kept in memory.
"""

import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from src.errors import RefinementLimit, SizeLimit, ValidationError
from src.geometry import simplex_volume

log = logging.getLogger(__name__)

CANDIDATES_PER_CELL = 30
MAX_DEPTH = 24
DEFAULT_CELL_BUDGET = 2_000_000
SCAN_CHUNK = 1 << 18
BBOX_SCAN_FACTOR = 64  # bounding-box cells scanned per budgeted cell
INSIDE_TOL = 1e-12


@dataclass
class SampleSet:
    simplex_id: int
    radius: float
    r_min: float
    points: np.ndarray

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"<SampleSet(simplex={self.simplex_id}, r={self.radius:.4g}, n={len(self.points)})>"


class _SimplexFrame:
    """Barycentric coordinates and outside-distance bound for a fixed simplex."""

    def __init__(self, coords: np.ndarray):
        self.coords = coords
        self.base = coords[0]
        inv = np.linalg.inv((coords[1:] - coords[0]).T)
        grads = np.vstack([-inv.sum(axis=0), inv])
        self._inv = inv
        self._grad_norm = np.linalg.norm(grads, axis=1)

    def barycentric(self, x: np.ndarray) -> np.ndarray:
        rest = (x - self.base) @ self._inv.T
        return np.column_stack([1.0 - rest.sum(axis=1), rest])

    def inside(self, x: np.ndarray) -> np.ndarray:
        return self.barycentric(x).min(axis=1) >= -INSIDE_TOL

    def outside_distance(self, x: np.ndarray) -> np.ndarray:
        """Lower bound on the distance from x to the simplex (0 inside)."""
        lam = self.barycentric(x)
        return np.maximum((-lam / self._grad_norm).max(axis=1), 0.0)


def simplex_rng(seed: Optional[int], simplex: Sequence[int]) -> np.random.Generator:
    """Generator seeded by (seed, sorted vertex ids) so a simplex samples the same way in every run."""
    return np.random.default_rng([0 if seed is None else int(seed), *sorted(int(v) for v in simplex)])


def mps_sample(simplex: Sequence[int], points: np.ndarray, r_cover: float,
               r_min: Optional[float] = None, seed: Optional[int] = None,
               simplex_id: int = -1, rng: Optional[np.random.Generator] = None,
               budget: int = DEFAULT_CELL_BUDGET) -> SampleSet:
    """Sample the simplex so that every point of it is within r_cover of a sample.

    Args:
        simplex: Vertex indices into points.
        points: Vertex coordinates (n x d).
        r_cover: Covering radius.
        r_min: Separation between samples, default r_cover / 2.
        seed: Combined with the vertex ids to seed the generator when rng is not given.
        budget: Largest number of active cells held at once.

    Raises:
        SizeLimit: r_cover is too small for the simplex under the budget.
        RefinementLimit: cells are still uncovered after MAX_DEPTH subdivisions.
    """
    if r_cover <= 0:
        raise ValidationError(f"r_cover must be positive, got {r_cover}")
    if r_min is None:
        r_min = r_cover / 2.0
    if not 0 < r_min < r_cover:
        raise ValidationError(f"r_min must lie in (0, r_cover), got {r_min} with r_cover={r_cover}")
    coords = np.asarray(points, dtype=float)[list(simplex)]
    d = coords.shape[1]
    frame = _SimplexFrame(coords)
    if rng is None:
        rng = simplex_rng(seed, simplex)

    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    side = r_cover / d
    if budget < 1:
        raise ValidationError(f"budget must be >= 1, got {budget}")
    extent = np.maximum(np.ceil((hi - lo) / side), 1.0)
    cells = _initial_cells(extent, lo, side, frame, r_cover, budget, simplex_volume(coords))

    samples = np.empty((0, d))
    tree = None
    depth = 0
    while len(cells):
        if depth > MAX_DEPTH:
            raise RefinementLimit(f"sampling of simplex {tuple(simplex)} left {len(cells)} cells uncovered "
                                  f"after {MAX_DEPTH} subdivisions")
        stride = int(np.floor(r_min / side)) + 2
        done = np.zeros(len(cells), dtype=bool)
        classes = cells % stride
        class_keys = classes @ (stride ** np.arange(d))
        for key in np.unique(class_keys):
            members = np.where(class_keys == key)[0]
            corner = lo + cells[members] * side
            cand = corner[:, None, :] + rng.random((len(members), CANDIDATES_PER_CELL, d)) * side
            flat = cand.reshape(-1, d)
            ok = frame.inside(flat)
            if tree is not None:
                dist, _ = tree.query(flat, k=1)
                ok &= dist > r_min
            ok = ok.reshape(len(members), CANDIDATES_PER_CELL)
            has = ok.any(axis=1)
            if not has.any():
                continue
            first = ok.argmax(axis=1)
            accepted = cand[np.where(has)[0], first[has]]
            samples = np.vstack([samples, accepted])
            tree = cKDTree(samples)
            done[members[has]] = True

        remaining = cells[~done]
        if not len(remaining):
            break
        offsets = np.array(list(itertools.product((0, 1), repeat=d)), dtype=np.int64)
        cells = (remaining[:, None, :] * 2 + offsets[None, :, :]).reshape(-1, d)
        side /= 2.0
        depth += 1
        cells = _keep_active(cells, lo, side, frame, tree, r_cover)
        if len(cells) > budget:
            raise SizeLimit(f"sampling of simplex {tuple(simplex)} needs {len(cells)} active cells, "
                            f"budget is {budget}")

    log.debug("mps_sample: simplex %s, r=%.4g, %d samples, depth %d", tuple(simplex), r_cover, len(samples), depth)
    return SampleSet(simplex_id=simplex_id, radius=r_cover, r_min=r_min, points=samples)


def _keep_active(cells: np.ndarray, lo: np.ndarray, side: float, frame: _SimplexFrame,
                 tree: Optional[cKDTree], r_cover: float) -> np.ndarray:
    if not len(cells):
        return cells
    d = cells.shape[1]
    half_diag = 0.5 * side * np.sqrt(d)
    centers = lo + (cells + 0.5) * side
    keep = frame.outside_distance(centers) <= half_diag
    if tree is not None and keep.any():
        dist, _ = tree.query(centers[keep], k=1)
        covered = np.zeros(len(cells), dtype=bool)
        covered[np.where(keep)[0]] = dist + half_diag <= r_cover
        keep &= ~covered
    return cells[keep]


def simplex_grid(coords: np.ndarray, step: float) -> np.ndarray:
    """Nodes of an axis-aligned grid of spacing step that lie inside the simplex, vertices included."""
    coords = np.asarray(coords, dtype=float)
    frame = _SimplexFrame(coords)
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    axes = [np.arange(a, b + step * 0.5, step) for a, b in zip(lo, hi)]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, coords.shape[1])
    return np.vstack([coords, mesh[frame.inside(mesh)]])


def covering_radius(coords: np.ndarray, samples: np.ndarray, step: float) -> float:
    """Largest distance from a grid node inside the simplex to its nearest sample."""
    nodes = simplex_grid(coords, step)
    dist, _ = cKDTree(samples).query(nodes, k=1)
    return float(dist.max())


def _initial_cells(extent: np.ndarray, lo: np.ndarray, side: float, frame: _SimplexFrame,
                   r_cover: float, budget: int, volume: float) -> np.ndarray:
    """Active cells of the background grid, scanned chunk by chunk over the bounding box."""
    d = len(extent)
    expected = volume / side ** d
    total = float(np.prod(extent))
    if expected > budget or total > BBOX_SCAN_FACTOR * budget:
        raise SizeLimit(f"covering radius {r_cover:.4g} needs about {expected:.3g} cells "
                        f"({total:.3g} in the bounding box), budget is {budget}")
    shape = tuple(int(n) for n in extent)
    total = int(np.prod(shape))
    active = []
    count = 0
    for start in range(0, total, SCAN_CHUNK):
        flat = np.arange(start, min(start + SCAN_CHUNK, total), dtype=np.int64)
        chunk = np.column_stack(np.unravel_index(flat, shape)).astype(np.int64)
        chunk = _keep_active(chunk, lo, side, frame, None, r_cover)
        count += len(chunk)
        if count > budget:
            raise SizeLimit(f"covering radius {r_cover:.4g} needs more than {budget} active cells")
        active.append(chunk)
    return np.vstack(active) if active else np.empty((0, d), dtype=np.int64)
