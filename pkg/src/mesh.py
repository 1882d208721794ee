"""Simplicial partitions: construction, validation, set systems and JSON I/O.

Mesh files are a single JSON document::

    {"dim": 2,
     "vertices": [{"x": [0.0, 0.0], "f": 1.5}, ...],
     "simplices": [[0, 1, 2], ...],
     "provenance": "free text"}

Floats are written with Python's shortest round-trip representation, so
load(save(p)) reproduces every coordinate and value bit for bit.
"""

import itertools
import json
import logging
import math
from collections import Counter
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from src.delaunay import Triangulation2D
from src.errors import IoError, ParseError, ValidationError
from src.geometry import barycentric_coordinates, is_degenerate
from src.models.partition import SetSystem, SimplicialPartition
from src.predicates import orientation

log = logging.getLogger(__name__)

CENTROID_TOL = 1e-9


def to_set_system(partition: SimplicialPartition) -> SetSystem:
    """One set per simplex: S_i = vertex ids of T_i."""
    ground = sorted({v for s in partition.simplices for v in s})
    return SetSystem(ground_set=ground, sets=list(partition.simplices))


def partition_from_triangulation(tri: Triangulation2D, values: Sequence[float],
                                 provenance: str = "") -> SimplicialPartition:
    return SimplicialPartition(tri.point_array(), np.asarray(values, dtype=float),
                               tri.triangles, provenance)


def grid_triangulation(nx: int, ny: int, domain: Tuple[float, float, float, float] = (0.0, 0.0, 1.0, 1.0),
                       diag_rule: str = "random", seed: Optional[int] = None,
                       f: Optional[Callable] = None) -> SimplicialPartition:
    """Orthogonal grid of nx x ny cells, each cut into two triangles.

    With diag_rule "fixed" every cell uses the diagonal from its lower-left
    to its upper-right corner; with "random" the diagonal is drawn per cell.
    Vertex values are f(x, y) when f is given, otherwise zero.
    """
    if nx < 1 or ny < 1:
        raise ValidationError(f"grid needs nx, ny >= 1, got {nx}x{ny}")
    if diag_rule not in ("random", "fixed"):
        raise ValidationError(f"unknown diag_rule '{diag_rule}'")
    xmin, ymin, xmax, ymax = domain
    xs = np.linspace(xmin, xmax, nx + 1)
    ys = np.linspace(ymin, ymax, ny + 1)
    gx, gy = np.meshgrid(xs, ys)
    points = np.column_stack([gx.ravel(), gy.ravel()])
    rng = np.random.default_rng(seed)
    flips = rng.integers(0, 2, size=(ny, nx)) if diag_rule == "random" else np.zeros((ny, nx), dtype=int)

    simplices = []
    for j in range(ny):
        for i in range(nx):
            p00 = j * (nx + 1) + i
            p10 = p00 + 1
            p01 = p00 + nx + 1
            p11 = p01 + 1
            if flips[j, i]:
                simplices.append((p00, p10, p01))
                simplices.append((p10, p11, p01))
            else:
                simplices.append((p00, p10, p11))
                simplices.append((p00, p11, p01))
    values = f(points[:, 0], points[:, 1]) if f is not None else np.zeros(len(points))
    return SimplicialPartition(points, np.asarray(values, dtype=float), simplices,
                               provenance=f"grid {nx}x{ny} diag={diag_rule} seed={seed}")


def cube_five_tetrahedra() -> SimplicialPartition:
    """Unit cube cut into one central and four corner tetrahedra."""
    points = [(x, y, z) for z in (0.0, 1.0) for y in (0.0, 1.0) for x in (0.0, 1.0)]
    simplices = [(1, 2, 4, 7), (0, 1, 2, 4), (1, 2, 3, 7), (1, 4, 5, 7), (2, 4, 6, 7)]
    values = [sum(p) for p in points]
    return SimplicialPartition(points, values, simplices, provenance="cube, 5 tetrahedra")


# -- validation --------------------------------------------------------------

def validate_partition(p: SimplicialPartition) -> None:
    """Raise ValidationError unless p is a polyhedral simplicial partition."""
    d = p.dim
    n = p.num_vertices
    errors = []
    if d < 1:
        errors.append("dim must be >= 1")
    if len(p.values) != n:
        errors.append(f"{n} vertices but {len(p.values)} values")
    if not np.all(np.isfinite(p.points)):
        errors.append("non-finite vertex coordinate")
    if not np.all(np.isfinite(p.values)):
        errors.append("non-finite vertex value")
    if not p.simplices:
        errors.append("no simplices")
    referenced = set()
    for i, s in enumerate(p.simplices):
        if len(s) != d + 1 or len(set(s)) != d + 1:
            errors.append(f"simplex {i} has {len(set(s))} distinct vertices, expected {d + 1}")
            continue
        if min(s) < 0 or max(s) >= n:
            errors.append(f"simplex {i} references an unknown vertex")
            continue
        referenced.update(s)
        if is_degenerate(p.points[list(s)]):
            errors.append(f"simplex {i} is not full-dimensional")
    unused = set(range(n)) - referenced
    if unused:
        errors.append(f"vertices {sorted(unused)[:10]} are not referenced by any simplex")
    dupes = [s for s, c in Counter(p.simplices).items() if c > 1]
    if dupes:
        errors.append(f"duplicate simplices {dupes[:5]}")
    if errors:
        raise ValidationError("Invalid simplicial partition:\n" + "\n".join(f"  - {e}" for e in errors))

    if d == 2:
        _check_planar(p)
    else:
        _check_sampled(p)


def _check_planar(p: SimplicialPartition) -> None:
    pts = [tuple(q) for q in p.points.tolist()]
    if len(set(pts)) != len(pts):
        raise ValidationError("two vertices share the same coordinates")
    tris = []
    for s in p.simplices:
        a, b, c = s
        if orientation(pts[a], pts[b], pts[c]) < 0:
            b, c = c, b
        tris.append((a, b, c))

    edge_count = Counter()
    for t in tris:
        for i in range(3):
            a, b = t[i], t[(i + 1) % 3]
            edge_count[(min(a, b), max(a, b))] += 1
    over = [e for e, c in edge_count.items() if c > 2]
    if over:
        raise ValidationError(f"edges {over[:5]} are shared by more than two triangles")

    boxes = []
    for k, t in enumerate(tris):
        xs = [pts[v][0] for v in t]
        ys = [pts[v][1] for v in t]
        boxes.append((min(xs), max(xs), min(ys), max(ys), k))
    boxes.sort()
    active: List[tuple] = []
    for box in boxes:
        active = [other for other in active if other[1] >= box[0]]
        for other in active:
            if other[3] < box[2] or box[3] < other[2]:
                continue
            if _triangles_overlap(pts, tris[box[4]], tris[other[4]]):
                raise ValidationError(
                    f"triangles {p.simplices[box[4]]} and {p.simplices[other[4]]} "
                    "do not meet in a shared face")
        active.append(box)


def _point_in_closed_triangle(pts, t, v) -> bool:
    a, b, c = t
    o1 = orientation(pts[a], pts[b], pts[v])
    o2 = orientation(pts[b], pts[c], pts[v])
    o3 = orientation(pts[c], pts[a], pts[v])
    return o1 >= 0 and o2 >= 0 and o3 >= 0


def _segments_cross(pts, a, b, c, d) -> bool:
    if len({a, b, c, d}) < 4:
        return False
    o1 = orientation(pts[a], pts[b], pts[c])
    o2 = orientation(pts[a], pts[b], pts[d])
    o3 = orientation(pts[c], pts[d], pts[a])
    o4 = orientation(pts[c], pts[d], pts[b])
    return o1 * o2 < 0 and o3 * o4 < 0


def _triangles_overlap(pts, ta, tb) -> bool:
    """True unless the two counterclockwise triangles meet in a common face (or not at all)."""
    shared = set(ta) & set(tb)
    for t, other in ((ta, tb), (tb, ta)):
        for v in other:
            if v not in shared and _point_in_closed_triangle(pts, t, v):
                return True
    for i in range(3):
        for j in range(3):
            if _segments_cross(pts, ta[i], ta[(i + 1) % 3], tb[j], tb[(j + 1) % 3]):
                return True
    return False


def _check_sampled(p: SimplicialPartition) -> None:
    centroids = np.array([p.points[list(s)].mean(axis=0) for s in p.simplices])
    for i, s in enumerate(p.simplices):
        lam = barycentric_coordinates(p.points[list(s)], centroids)
        inside = np.where(lam.min(axis=1) > CENTROID_TOL)[0]
        others = [j for j in inside if j != i]
        if others:
            raise ValidationError(
                f"centroid of simplex {p.simplices[others[0]]} lies inside simplex {s}")


# -- JSON I/O ----------------------------------------------------------------

def mesh_to_dict(p: SimplicialPartition) -> dict:
    return {
        "dim": p.dim,
        "vertices": [{"x": [float(c) for c in x], "f": float(v)} for x, v in zip(p.points, p.values)],
        "simplices": [list(s) for s in p.simplices],
        "provenance": p.provenance,
    }


def mesh_from_dict(data: dict, validate: bool = True) -> SimplicialPartition:
    if not isinstance(data, dict):
        raise ParseError("mesh document must be a JSON object")
    for key in ("dim", "vertices", "simplices"):
        if key not in data:
            raise ParseError("missing key", field=key)
    dim = data["dim"]
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise ParseError("dim must be a positive integer", field="dim")

    points, values = [], []
    for i, vertex in enumerate(data["vertices"]):
        where = f"vertices[{i}]"
        if not isinstance(vertex, dict) or "x" not in vertex or "f" not in vertex:
            raise ParseError("vertex must be an object with 'x' and 'f'", field=where)
        x = vertex["x"]
        if not isinstance(x, list) or len(x) != dim or not all(_is_number(c) for c in x):
            raise ParseError(f"expected {dim} numeric coordinates", field=f"{where}.x")
        if not _is_number(vertex["f"]):
            raise ParseError("value must be numeric", field=f"{where}.f")
        points.append([float(c) for c in x])
        values.append(float(vertex["f"]))

    simplices = []
    for i, s in enumerate(data["simplices"]):
        if not isinstance(s, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in s):
            raise ParseError("simplex must be a list of vertex indices", field=f"simplices[{i}]")
        simplices.append(tuple(s))

    p = SimplicialPartition(np.array(points, dtype=float).reshape(-1, dim), values, simplices,
                            str(data.get("provenance", "")))
    for i, s in enumerate(data["simplices"]):
        if len(s) != dim + 1:
            raise ValidationError(f"simplex {i} has {len(s)} vertices but dim={dim} needs {dim + 1}")
    if validate:
        validate_partition(p)
    return p


def _is_number(value) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def save_mesh(p: SimplicialPartition, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(mesh_to_dict(p), fh, indent=1)
            fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write mesh to {path}: {e}") from e


def load_mesh(path, validate: bool = True) -> SimplicialPartition:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise IoError(f"cannot read mesh {path}: {e}") from e
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in {path}: {e.msg}", line=e.lineno) from e
    return mesh_from_dict(data, validate=validate)


def mesh_edges(p: SimplicialPartition) -> List[Tuple[int, int]]:
    """Sorted list of the 1-faces of the partition."""
    edges = set()
    for s in p.simplices:
        edges.update(itertools.combinations(s, 2))
    return sorted(edges)
