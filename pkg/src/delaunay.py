"""Incremental Bowyer-Watson Delaunay triangulation of a rectangle.

The rectangle is the bounding box of the input points and its four corners
must be among them, so the convex hull is the domain itself. Its sides are
kept as constrained boundary segments which are subdivided whenever a point
is inserted on them.
"""

import logging
import math
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import DegenerateInput, DuplicatePoint
from src.predicates import incircle, orientation

log = logging.getLogger(__name__)

MERGE_TOL_FACTOR = 1e-12

Tri = Tuple[int, int, int]
Edge = Tuple[int, int]


def _canonical(a: int, b: int, c: int) -> Tri:
    """Rotate a counterclockwise triple so that its smallest index comes first."""
    if a < b and a < c:
        return (a, b, c)
    if b < a and b < c:
        return (b, c, a)
    return (c, a, b)


def _seg(a: int, b: int) -> Edge:
    return (a, b) if a < b else (b, a)


class Triangulation2D:
    """Delaunay triangulation with half-edge lookup.

    Triangles are stored counterclockwise; ``_edge[(a, b)]`` is the triangle
    owning the directed edge a->b, so the neighbour across it owns (b, a).
    """

    def __init__(self, domain: Tuple[float, float, float, float], merge_tol: float):
        self.domain = domain
        self.merge_tol = merge_tol
        self.points: List[Tuple[float, float]] = []
        self._tris: Dict[Tri, None] = {}
        self._edge: Dict[Edge, Tri] = {}
        self._segments: Dict[Edge, None] = {}
        self._hint: Optional[Tri] = None
        self._walk_step = 0

    # -- construction -------------------------------------------------------

    def copy(self) -> "Triangulation2D":
        other = Triangulation2D(self.domain, self.merge_tol)
        other.points = list(self.points)
        other._tris = dict(self._tris)
        other._edge = dict(self._edge)
        other._segments = dict(self._segments)
        other._hint = self._hint
        return other

    def _add_triangle(self, a: int, b: int, c: int) -> Tri:
        tri = _canonical(a, b, c)
        self._tris[tri] = None
        x, y, z = tri
        self._edge[(x, y)] = tri
        self._edge[(y, z)] = tri
        self._edge[(z, x)] = tri
        return tri

    def _remove_triangle(self, tri: Tri) -> None:
        del self._tris[tri]
        x, y, z = tri
        for edge in ((x, y), (y, z), (z, x)):
            if self._edge.get(edge) == tri:
                del self._edge[edge]

    # -- queries ------------------------------------------------------------

    @property
    def num_points(self) -> int:
        return len(self.points)

    @property
    def num_triangles(self) -> int:
        return len(self._tris)

    def oriented_triangles(self) -> List[Tri]:
        """Counterclockwise triangles in insertion order."""
        return list(self._tris)

    def has_triangle(self, tri: Tri) -> bool:
        return tri in self._tris

    @property
    def triangles(self) -> List[Tri]:
        return sorted(tuple(sorted(t)) for t in self._tris)

    @property
    def adjacency(self) -> List[List[int]]:
        """For each entry of ``triangles``: neighbour index opposite each vertex, -1 on the boundary."""
        tris = self.triangles
        index = {t: i for i, t in enumerate(tris)}
        out = []
        for t in tris:
            row = []
            for k in range(3):
                a, b = (v for j, v in enumerate(t) if j != k)
                owner = self._edge.get((a, b))
                other = self._edge.get((b, a))
                nb = other if owner is not None and tuple(sorted(owner)) == t else owner
                row.append(index[tuple(sorted(nb))] if nb is not None else -1)
            out.append(row)
        return out

    @property
    def constrained_segments(self) -> List[Edge]:
        return sorted(self._segments)

    def is_segment(self, a: int, b: int) -> bool:
        return _seg(a, b) in self._segments

    def iter_segments(self):
        return iter(list(self._segments))

    def edge_owner(self, a: int, b: int) -> Optional[Tri]:
        """Triangle containing the undirected edge ab (the owner of a->b preferred)."""
        return self._edge.get((a, b)) or self._edge.get((b, a))

    def neighbor(self, a: int, b: int) -> Optional[Tri]:
        """Triangle on the far side of directed edge a->b."""
        return self._edge.get((b, a))

    def point_array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def contains_point(self, p: Sequence[float]) -> bool:
        xmin, ymin, xmax, ymax = self.domain
        return xmin <= p[0] <= xmax and ymin <= p[1] <= ymax

    def total_area(self) -> float:
        pts = self.points
        area = 0.0
        for a, b, c in self._tris:
            (ax, ay), (bx, by), (cx, cy) = pts[a], pts[b], pts[c]
            area += 0.5 * ((bx - ax) * (cy - ay) - (by - ay) * (cx - ax))
        return area

    def locate(self, p: Sequence[float]) -> Tri:
        """Visibility walk to a triangle containing p (inside or on its boundary)."""
        if not self.contains_point(p):
            raise DegenerateInput(f"point {tuple(p)} lies outside the domain {self.domain}")
        tri = self._hint if self._hint in self._tris else next(iter(self._tris))
        pts = self.points
        for _ in range(4 * len(self._tris) + 16):
            self._walk_step += 1
            start = self._walk_step % 3
            moved = False
            for k in range(3):
                i = (start + k) % 3
                a, b = tri[i], tri[(i + 1) % 3]
                if orientation(pts[a], pts[b], p) < 0:
                    nb = self._edge.get((b, a))
                    if nb is None:
                        raise DegenerateInput(f"point {tuple(p)} lies outside the triangulation")
                    tri = nb
                    moved = True
                    break
            if not moved:
                self._hint = tri
                return tri
        raise DegenerateInput(f"point location did not converge for {tuple(p)}")

    def find_vertex(self, p: Sequence[float]) -> Optional[int]:
        """Index of an existing vertex within the merge tolerance of p, if any."""
        tri = self.locate(p)
        return self._near_vertex(p, tri)

    def _near_vertex(self, p, candidates: Iterable[int]) -> Optional[int]:
        for v in candidates:
            q = self.points[v]
            if math.hypot(q[0] - p[0], q[1] - p[1]) <= self.merge_tol:
                return v
        return None

    # -- insertion ----------------------------------------------------------

    def insert(self, p: Sequence[float]) -> Tuple[int, List[Tri]]:
        """Insert p and restore the Delaunay property.

        Returns the new vertex index and the list of created triangles.
        """
        p = (float(p[0]), float(p[1]))
        start = self.locate(p)
        pts = self.points

        cavity = {start: None}
        stack = [start]
        while stack:
            tri = stack.pop()
            for i in range(3):
                a, b = tri[i], tri[(i + 1) % 3]
                nb = self._edge.get((b, a))
                if nb is None or nb in cavity:
                    continue
                x, y, z = nb
                if incircle(pts[x], pts[y], pts[z], p) > 0:
                    cavity[nb] = None
                    stack.append(nb)

        near = self._near_vertex(p, {v for t in cavity for v in t})
        if near is not None:
            raise DuplicatePoint(f"point {p} duplicates vertex {near} {self.points[near]}")

        boundary = []
        for tri in cavity:
            for i in range(3):
                a, b = tri[i], tri[(i + 1) % 3]
                if self._edge.get((b, a)) not in cavity:
                    boundary.append((a, b))

        new_index = len(pts)
        pts.append(p)
        for tri in cavity:
            self._remove_triangle(tri)

        created = []
        for a, b in boundary:
            side = orientation(pts[a], pts[b], p)
            if side > 0:
                created.append(self._add_triangle(a, b, new_index))
            elif side == 0:
                key = _seg(a, b)
                if key in self._segments:
                    del self._segments[key]
                    self._segments[_seg(a, new_index)] = None
                    self._segments[_seg(new_index, b)] = None
                else:
                    log.warning("point %s collinear with unconstrained cavity edge (%d, %d)", p, a, b)
            else:
                raise DegenerateInput(f"cavity not star-shaped around {p}")
        if created:
            self._hint = created[0]
        return new_index, created


def _corner_indices(points: Sequence[Tuple[float, float]], domain) -> List[int]:
    xmin, ymin, xmax, ymax = domain
    corners = [(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)]
    lookup = {}
    for i, p in enumerate(points):
        lookup.setdefault(p, i)
    missing = [c for c in corners if c not in lookup]
    if missing:
        raise DegenerateInput(f"corner points {missing} of the bounding rectangle are missing")
    return [lookup[c] for c in corners]


def delaunay(points: Sequence[Sequence[float]], merge_tol: Optional[float] = None) -> Triangulation2D:
    """Delaunay triangulation of points whose bounding box corners are included.

    Points are inserted in index order; cocircular configurations keep the
    earlier triangles, so ties resolve towards the lowest vertex indices.
    """
    pts = [(float(p[0]), float(p[1])) for p in points]
    if len(pts) < 3:
        raise DegenerateInput("at least 3 points are required")
    for p in pts:
        if not (math.isfinite(p[0]) and math.isfinite(p[1])):
            raise DegenerateInput(f"non-finite coordinate in {p}")
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    domain = (min(xs), min(ys), max(xs), max(ys))
    if domain[0] == domain[2] or domain[1] == domain[3]:
        raise DegenerateInput("all points are collinear")
    diag = math.hypot(domain[2] - domain[0], domain[3] - domain[1])
    if merge_tol is None:
        merge_tol = MERGE_TOL_FACTOR * diag

    corners = _corner_indices(pts, domain)
    tri = Triangulation2D(domain, merge_tol)

    # The triangulation stores vertices in input order, so corners are
    # placed first and the remaining points keep their relative order.
    order = sorted(corners) + [i for i in range(len(pts)) if i not in set(corners)]
    remap = {}
    for k, i in enumerate(sorted(corners)):
        tri.points.append(pts[i])
        remap[i] = k
    c0, c1, c2, c3 = (remap[i] for i in corners)
    # diagonal through the lowest-index corner
    if min(c0, c2) < min(c1, c3):
        tri._add_triangle(c0, c1, c2)
        tri._add_triangle(c0, c2, c3)
    else:
        tri._add_triangle(c1, c2, c3)
        tri._add_triangle(c1, c3, c0)
    for a, b in ((c0, c1), (c1, c2), (c2, c3), (c3, c0)):
        tri._segments[_seg(a, b)] = None

    for i in order[4:]:
        new_index, _ = tri.insert(pts[i])
        remap[i] = new_index

    if any(remap[i] != i for i in range(len(pts))):
        tri = _renumber(tri, [remap[i] for i in range(len(pts))])
    log.debug("delaunay: %d points, %d triangles", tri.num_points, tri.num_triangles)
    return tri


def _renumber(tri: Triangulation2D, new_of_input: List[int]) -> Triangulation2D:
    """Relabel vertices so that vertex i is the i-th input point."""
    old_to_new = {old: i for i, old in enumerate(new_of_input)}
    out = Triangulation2D(tri.domain, tri.merge_tol)
    out.points = [tri.points[old] for old in new_of_input]
    for a, b, c in tri._tris:
        out._add_triangle(old_to_new[a], old_to_new[b], old_to_new[c])
    for a, b in tri._segments:
        out._segments[_seg(old_to_new[a], old_to_new[b])] = None
    return out
