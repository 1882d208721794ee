"""Ruppert's Delaunay refinement on a rectangle.

The rectangle sides are constrained segments. Encroached segments are split
at their midpoints first; a skinny triangle is then removed by inserting its
circumcenter unless that point would encroach a segment, in which case the
encroached segments are split instead.
"""

import logging
from collections import deque
from typing import Callable, Iterable, List, Optional

from src.delaunay import Tri, Triangulation2D
from src.errors import DuplicatePoint, RefinementLimit, ValidationError
from src.geometry import circumcenter, min_angle
from src.predicates import in_diametral_circle

log = logging.getLogger(__name__)

DEFAULT_MAX_INSERTIONS = 10 ** 6


class RuppertRefiner:
    def __init__(self, alpha_lb: float, max_insertions: int = DEFAULT_MAX_INSERTIONS,
                 on_insert: Optional[Callable[[int], None]] = None):
        """
        Args:
            alpha_lb: Angle bound in degrees; every output triangle has a larger minimum angle.
            max_insertions: Cap on inserted vertices before giving up.
            on_insert: Called with the index of every inserted vertex.
        """
        if not 0.0 < alpha_lb < 20.0:
            raise ValidationError(f"alpha_lb must lie in (0, 20) degrees, got {alpha_lb}")
        self.alpha_lb = alpha_lb
        self.max_insertions = max_insertions
        self.on_insert = on_insert
        self.insertions = 0

    def _is_skinny(self, tri: Triangulation2D, t: Tri) -> bool:
        pts = tri.points
        return min_angle(pts[t[0]], pts[t[1]], pts[t[2]]) <= self.alpha_lb

    def _apex(self, tri: Triangulation2D, a: int, b: int) -> Optional[int]:
        owner = tri.edge_owner(a, b)
        if owner is None:
            return None
        return next(v for v in owner if v != a and v != b)

    def _encroached(self, tri: Triangulation2D, seg) -> bool:
        a, b = seg
        apex = self._apex(tri, a, b)
        if apex is None:
            return False
        pts = tri.points
        return in_diametral_circle(pts[a], pts[b], pts[apex])

    def _insert(self, tri: Triangulation2D, p) -> List[Tri]:
        if self.insertions >= self.max_insertions:
            raise RefinementLimit(f"Ruppert refinement exceeded {self.max_insertions} insertions")
        index, created = tri.insert(p)
        self.insertions += 1
        if self.on_insert is not None:
            self.on_insert(index)
        return created

    def _boundary_edges(self, tri: Triangulation2D, triangles: Iterable[Tri]) -> List:
        out = []
        for t in triangles:
            for i in range(3):
                a, b = t[i], t[(i + 1) % 3]
                if tri.is_segment(a, b):
                    out.append((min(a, b), max(a, b)))
        return out

    def refine(self, tri: Triangulation2D, seeds: Optional[Iterable[Tri]] = None) -> List[int]:
        """Refine tri in place. Only triangles in seeds (default: all) and their descendants are examined.

        Returns the indices of the inserted vertices.
        """
        first_new = tri.num_points
        start = self.insertions
        triangles = deque(tri.oriented_triangles() if seeds is None else seeds)
        segments = deque(tri.constrained_segments if seeds is None
                         else self._boundary_edges(tri, triangles))
        skipped: List[Tri] = []

        while segments or triangles:
            if segments:
                seg = segments.popleft()
                if tri.is_segment(*seg) and self._encroached(tri, seg):
                    created = self._split_segment(tri, seg)
                    triangles.extend(created)
                    segments.extend(self._boundary_edges(tri, created))
                continue

            t = triangles.popleft()
            if not tri.has_triangle(t) or not self._is_skinny(tri, t):
                continue
            pts = tri.points
            center = circumcenter(pts[t[0]], pts[t[1]], pts[t[2]])
            hit = [seg for seg in tri.iter_segments()
                   if in_diametral_circle(pts[seg[0]], pts[seg[1]], center)]
            if hit or not tri.contains_point(center):
                if not hit:
                    hit = [self._nearest_segment(tri, center)]
                for seg in hit:
                    if tri.is_segment(*seg):
                        created = self._split_segment(tri, seg)
                        triangles.extend(created)
                        segments.extend(self._boundary_edges(tri, created))
                triangles.append(t)
                continue
            try:
                created = self._insert(tri, center)
            except DuplicatePoint:
                log.warning("circumcenter %s of %s coincides with a vertex; skipped", center, t)
                skipped.append(t)
                continue
            triangles.extend(created)
            segments.extend(self._boundary_edges(tri, created))

        left = [t for t in skipped if tri.has_triangle(t) and self._is_skinny(tri, t)]
        if left:
            raise RefinementLimit(f"{len(left)} triangles keep a minimum angle <= {self.alpha_lb} degrees "
                                  f"after skipped circumcenter insertions, e.g. {left[0]}")

        inserted = list(range(first_new, tri.num_points))
        if self.insertions > start:
            log.debug("ruppert: %d insertions", self.insertions - start)
        return inserted

    def _split_segment(self, tri: Triangulation2D, seg) -> List[Tri]:
        a, b = seg
        pa, pb = tri.points[a], tri.points[b]
        mid = ((pa[0] + pb[0]) / 2.0, (pa[1] + pb[1]) / 2.0)
        return self._insert(tri, mid)

    def _nearest_segment(self, tri: Triangulation2D, p):
        pts = tri.points

        def dist(seg):
            (ax, ay), (bx, by) = pts[seg[0]], pts[seg[1]]
            mx, my = (ax + bx) / 2.0, (ay + by) / 2.0
            return (mx - p[0]) ** 2 + (my - p[1]) ** 2

        return min(tri.iter_segments(), key=dist)


def refine_ruppert(tri: Triangulation2D, alpha_lb: float,
                   max_insertions: int = DEFAULT_MAX_INSERTIONS) -> Triangulation2D:
    """Refined copy of tri whose triangles all have minimum angle > alpha_lb."""
    out = tri.copy()
    RuppertRefiner(alpha_lb, max_insertions).refine(out)
    return out
