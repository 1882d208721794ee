"""Simplex primitives in any dimension."""

import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from src.errors import Degenerate

VOLUME_TOL = 1e-14


@dataclass(frozen=True)
class SimplexMetrics:
    ell_max: float
    delta_min: float
    volume: float
    alpha_min: Optional[float] = None  # degrees, d=2 only


def simplex_volume(coords: np.ndarray) -> float:
    """Volume of the simplex spanned by the rows of coords ((d+1) x d)."""
    coords = np.asarray(coords, dtype=float)
    d = coords.shape[1]
    edges = coords[1:] - coords[0]
    return abs(float(np.linalg.det(edges))) / math.factorial(d)


def is_degenerate(coords: np.ndarray) -> bool:
    coords = np.asarray(coords, dtype=float)
    d = coords.shape[1]
    ell = _longest_edge(coords)
    if ell == 0.0:
        return True
    return simplex_volume(coords) <= VOLUME_TOL * ell ** d


def _longest_edge(coords: np.ndarray) -> float:
    best = 0.0
    for i, j in itertools.combinations(range(len(coords)), 2):
        best = max(best, float(np.linalg.norm(coords[i] - coords[j])))
    return best


def triangle_angles(a: Sequence[float], b: Sequence[float], c: Sequence[float]) -> tuple:
    """Interior angles (degrees) at a, b and c."""
    pa, pb, pc = (np.asarray(p, dtype=float) for p in (a, b, c))

    def angle(p, q, r):
        u, v = q - p, r - p
        cross = u[0] * v[1] - u[1] * v[0]
        return math.degrees(math.atan2(abs(cross), float(np.dot(u, v))))

    return angle(pa, pb, pc), angle(pb, pc, pa), angle(pc, pa, pb)


def min_angle(a, b, c) -> float:
    return min(triangle_angles(a, b, c))


def circumcenter(a: Sequence[float], b: Sequence[float], c: Sequence[float]) -> tuple:
    ax, ay = a
    bx, by = b
    cx, cy = c
    d = 2.0 * (ax * (by - cy) + bx * (cy - ay) + cx * (ay - by))
    if d == 0.0:
        raise Degenerate("circumcenter of collinear points")
    a2 = ax * ax + ay * ay
    b2 = bx * bx + by * by
    c2 = cx * cx + cy * cy
    ux = (a2 * (by - cy) + b2 * (cy - ay) + c2 * (ay - by)) / d
    uy = (a2 * (cx - bx) + b2 * (ax - cx) + c2 * (bx - ax)) / d
    return ux, uy


def barycentric_coordinates(coords: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of the rows of x (n x d) w.r.t. the simplex coords ((d+1) x d)."""
    coords = np.asarray(coords, dtype=float)
    x = np.atleast_2d(np.asarray(x, dtype=float))
    base = coords[0]
    edges = (coords[1:] - base).T
    rest = np.linalg.solve(edges, (x - base).T).T
    first = 1.0 - rest.sum(axis=1)
    return np.column_stack([first, rest])


def _affine_hull_distance(p: np.ndarray, q: np.ndarray) -> Optional[float]:
    """Distance between aff(p) and aff(q) if attained with both foot points inside the hulls."""
    if len(p) == 1 and len(q) == 1:
        return float(np.linalg.norm(p[0] - q[0]))
    mat = np.hstack([(p[1:] - p[0]).T, -(q[1:] - q[0]).T])
    sol, *_ = np.linalg.lstsq(mat, q[0] - p[0], rcond=None)
    s, t = sol[:len(p) - 1], sol[len(p) - 1:]
    lam = np.concatenate([[1.0 - s.sum()], s])
    mu = np.concatenate([[1.0 - t.sum()], t])
    if lam.min() < -1e-12 or mu.min() < -1e-12:
        return None
    x = lam @ p
    y = mu @ q
    return float(np.linalg.norm(x - y))


def face_distance_min(coords: np.ndarray) -> float:
    """Minimum distance between two disjoint faces of the simplex."""
    coords = np.asarray(coords, dtype=float)
    n = len(coords)
    if coords.shape[1] == 2 and n == 3:
        return min(_altitudes(coords))
    best = math.inf
    indices = range(n)
    for k in range(1, n):
        for left in itertools.combinations(indices, k):
            right_all = [i for i in indices if i not in left]
            for kk in range(1, len(right_all) + 1):
                for right in itertools.combinations(right_all, kk):
                    for ll in range(1, len(left) + 1):
                        for sub in itertools.combinations(left, ll):
                            dist = _affine_hull_distance(coords[list(sub)], coords[list(right)])
                            if dist is not None:
                                best = min(best, dist)
    return best


def _altitudes(coords: np.ndarray) -> list:
    out = []
    for i in range(3):
        p = coords[i]
        a, b = coords[(i + 1) % 3], coords[(i + 2) % 3]
        base = float(np.linalg.norm(b - a))
        cross = abs((b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]))
        out.append(cross / base)
    return out


def simplex_metrics(simplex: Sequence[int], points: np.ndarray) -> SimplexMetrics:
    """Longest edge, shortest distance between disjoint faces, volume and (d=2) smallest angle."""
    coords = np.asarray(points, dtype=float)[list(simplex)]
    if is_degenerate(coords):
        raise Degenerate(f"simplex {tuple(simplex)} has (near) zero volume")
    alpha = None
    if coords.shape[1] == 2:
        alpha = min_angle(*coords)
    return SimplexMetrics(
        ell_max=_longest_edge(coords),
        delta_min=face_distance_min(coords),
        volume=simplex_volume(coords),
        alpha_min=alpha,
    )
