"""MILP formulations of "lambda lies in the convex hull of one of the sets S_i".

Every builder returns a MilpModel whose metadata names the formulation and
lists vertex blocks for the verifier: each block ties a vertex set to the
variables that carry weight for it. Variable names are stable:
lam_<v> for the convex multipliers, y_<l> per biclique, z_<c> per colour.
"""

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.conflict import conflict_hypergraph
from src.errors import OrderingUnavailable, SpecIncomplete, ValidationError
from src.models.biclique import BicliqueCover, edge_key
from src.models.coloring import Coloring
from src.models.hypergraph import ConflictHypergraph
from src.models.milp_model import MilpModel, size_report  # noqa: F401  (re-exported)
from src.models.partition import SetSystem, SimplicialPartition
from src.mesh import to_set_system

log = logging.getLogger(__name__)

BASELINES = ("dlog", "inc", "mc", "dcc", "cc")
FORMULATIONS = ("gib",) + BASELINES
ORDERING_BUDGET = 100_000


@dataclass
class DisjunctionSpec:
    system: SetSystem
    points: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None
    cover: Optional[BicliqueCover] = None
    coloring: Optional[Coloring] = None
    has_higher_rank: bool = False

    @classmethod
    def from_partition(cls, partition: SimplicialPartition, cover: Optional[BicliqueCover] = None,
                       coloring: Optional[Coloring] = None,
                       hg: Optional[ConflictHypergraph] = None) -> "DisjunctionSpec":
        hg = hg if hg is not None else conflict_hypergraph(partition)
        return cls(to_set_system(partition), partition.points, partition.values,
                   cover, coloring, hg.rank >= 3)

    @property
    def vertices(self) -> List[int]:
        return self.system.ground_set

    @property
    def simplices(self) -> List[Tuple[int, ...]]:
        return self.system.sets

    @property
    def dim(self) -> int:
        if self.points is None:
            raise SpecIncomplete("vertex coordinates are needed for this formulation")
        return int(np.asarray(self.points).shape[1])

    def conflict_pairs(self) -> List[Tuple[int, int]]:
        return [(u, v) for u, v in itertools.combinations(self.vertices, 2)
                if not self.system.is_feasible((u, v))]

    def uncovered_conflicts(self) -> List[Tuple[int, int]]:
        cover = self.cover or BicliqueCover()
        return cover.uncovered(self.conflict_pairs())

    def validate(self) -> None:
        problems = []
        known = set(self.vertices)
        for ell, b in enumerate(self.cover or [], start=1):
            unknown = (set(b.A) | set(b.B)) - known
            if unknown:
                problems.append(f"biclique {ell} uses unknown vertices {sorted(unknown)}")
            bad = [edge_key(a, c) for a in b.A for c in b.B if self.system.is_feasible((a, c))]
            if bad:
                problems.append(f"biclique {ell} contains feasible pairs {bad[:3]}")
        if self.coloring is not None and len(self.coloring.gamma) != len(self.simplices):
            problems.append(f"colouring has {len(self.coloring.gamma)} entries for {len(self.simplices)} sets")
        if self.points is not None and len(self.points) < len(self.vertices):
            problems.append("fewer coordinate rows than vertices")
        if problems:
            raise ValidationError("Invalid disjunction spec:\n" + "\n".join(f"  - {p}" for p in problems))


# -- shared pieces --------------------------------------------------------------

def _lambda_block(model: MilpModel, spec: DisjunctionSpec) -> None:
    for v in spec.vertices:
        model.continuous(f"lam_{v}", 0.0, 1.0)
    model.metadata["blocks"] = [{"vertices": [v], "vars": [f"lam_{v}"]}
                                for v in spec.vertices]


def _output_block(model: MilpModel, spec: DisjunctionSpec) -> None:
    """x_k = sum_v v_k lam_v and fhat = sum_v f(v) lam_v."""
    if spec.points is None or spec.values is None:
        raise SpecIncomplete("output variables need vertex coordinates and values")
    points = np.asarray(spec.points, dtype=float)
    values = np.asarray(spec.values, dtype=float)
    for k in range(1, spec.dim + 1):
        model.continuous(f"x_{k}", -math.inf, math.inf)
    model.continuous("fhat", -math.inf, math.inf)
    for k in range(1, spec.dim + 1):
        model.constrain(f"out_x_{k}", [(f"x_{k}", 1.0)] + [(f"lam_{v}", -points[v, k - 1]) for v in spec.vertices],
                        "=", 0.0)
    model.constrain("out_f", [("fhat", 1.0)] + [(f"lam_{v}", -values[v]) for v in spec.vertices], "=", 0.0)


def _convexity(model: MilpModel, spec: DisjunctionSpec) -> None:
    model.constrain("convexity", [(f"lam_{v}", 1.0) for v in spec.vertices], "=", 1.0)


def pattern_groups(coloring: Coloring) -> List[Tuple[frozenset, List[int]]]:
    """Vertices grouped by colour pattern, groups ordered by their smallest vertex."""
    groups: Dict[frozenset, List[int]] = {}
    for v, pattern in coloring.color_patterns.items():
        groups.setdefault(pattern, []).append(v)
    return sorted(((p, sorted(vs)) for p, vs in groups.items()), key=lambda item: item[1][0])


# -- GIB ----------------------------------------------------------------------------

def build_gib(spec: DisjunctionSpec, with_output: bool = False, strict: bool = True) -> MilpModel:
    """One binary per biclique plus, when conflicts of size >= 3 exist, one binary per colour.

    For biclique (A, B): sum_A lam <= y and sum_B lam <= 1 - y. For the
    colouring: sum z = 1 and, for every colour pattern pi with vertex set
    V_pi, sum_{V_pi} lam <= sum_{c in pi} z_c.
    """
    spec.validate()
    if spec.has_higher_rank and spec.coloring is None:
        raise SpecIncomplete("conflicts of size >= 3 need a blocking colouring")
    if strict:
        missing = spec.uncovered_conflicts()
        if missing:
            raise ValidationError(f"biclique cover misses {len(missing)} conflict pairs, e.g. {missing[:3]}")
    cover = spec.cover or BicliqueCover()
    model = MilpModel("gib", metadata={"formulation": "gib"})
    _lambda_block(model, spec)
    for ell in range(1, len(cover) + 1):
        model.binary(f"y_{ell}")
    colors = spec.coloring.q if spec.has_higher_rank else 0
    for c in range(1, colors + 1):
        model.binary(f"z_{c}")

    _convexity(model, spec)
    for ell, b in enumerate(cover, start=1):
        model.constrain(f"bic_{ell}_a", [(f"lam_{v}", 1.0) for v in b.A] + [(f"y_{ell}", -1.0)], "<=", 0.0)
        model.constrain(f"bic_{ell}_b", [(f"lam_{v}", 1.0) for v in b.B] + [(f"y_{ell}", 1.0)], "<=", 1.0)
    if colors:
        model.constrain("colsum", [(f"z_{c}", 1.0) for c in range(1, colors + 1)], "=", 1.0)
        for k, (pattern, group) in enumerate(pattern_groups(spec.coloring), start=1):
            terms = [(f"lam_{v}", 1.0) for v in group] + [(f"z_{c}", -1.0) for c in sorted(pattern)]
            model.constrain(f"col_{k}", terms, "<=", 0.0)
    if with_output:
        _output_block(model, spec)
    log.info("gib: %d bicliques, %d colours, %r", len(cover), colors, model)
    return model


# -- independent branching ------------------------------------------------------------

Scheme = List[Tuple[frozenset, frozenset]]


def scheme_from_cover(vertices: Sequence[int], cover: BicliqueCover) -> Scheme:
    """Biclique (A, B) becomes the branching pair (V - A, V - B)."""
    ground = frozenset(vertices)
    return [(ground - frozenset(b.A), ground - frozenset(b.B)) for b in cover]


def build_independent_branching(spec: DisjunctionSpec, scheme: Scheme, with_output: bool = False) -> MilpModel:
    """sum_{v not in L} lam_v <= z and sum_{v not in R} lam_v <= 1 - z for every pair (L, R) of the scheme."""
    model = MilpModel("ib", metadata={"formulation": "ib"})
    _lambda_block(model, spec)
    for ell in range(1, len(scheme) + 1):
        model.binary(f"z_{ell}")
    _convexity(model, spec)
    for ell, (left, right) in enumerate(scheme, start=1):
        model.constrain(f"ib_{ell}_l", [(f"lam_{v}", 1.0) for v in spec.vertices if v not in left]
                        + [(f"z_{ell}", -1.0)], "<=", 0.0)
        model.constrain(f"ib_{ell}_r", [(f"lam_{v}", 1.0) for v in spec.vertices if v not in right]
                        + [(f"z_{ell}", 1.0)], "<=", 1.0)
    if with_output:
        _output_block(model, spec)
    return model


# -- baselines ------------------------------------------------------------------------

def _incident(spec: DisjunctionSpec) -> Dict[int, List[int]]:
    out: Dict[int, List[int]] = {v: [] for v in spec.vertices}
    for i, s in enumerate(spec.simplices, start=1):
        for v in s:
            out[v].append(i)
    return out


def _build_cc(spec: DisjunctionSpec) -> MilpModel:
    """Convex combination: lam_v <= sum of the y_i of the sets containing v."""
    model = MilpModel("cc", metadata={"formulation": "cc"})
    _lambda_block(model, spec)
    m = len(spec.simplices)
    for i in range(1, m + 1):
        model.binary(f"y_{i}")
    _convexity(model, spec)
    model.constrain("choice", [(f"y_{i}", 1.0) for i in range(1, m + 1)], "=", 1.0)
    for v, sets in _incident(spec).items():
        model.constrain(f"cc_{v}", [(f"lam_{v}", 1.0)] + [(f"y_{i}", -1.0) for i in sets], "<=", 0.0)
    return model


def _disaggregated(model: MilpModel, spec: DisjunctionSpec) -> None:
    """lamd_i_v per set i and member v, linked to lam_v = sum_i lamd_i_v."""
    for i, s in enumerate(spec.simplices, start=1):
        for v in s:
            model.continuous(f"lamd_{i}_{v}", 0.0, 1.0)


def _link(model: MilpModel, spec: DisjunctionSpec) -> None:
    for v, sets in _incident(spec).items():
        model.constrain(f"link_{v}", [(f"lam_{v}", 1.0)] + [(f"lamd_{i}_{v}", -1.0) for i in sets], "=", 0.0)


def _build_dcc(spec: DisjunctionSpec) -> MilpModel:
    model = MilpModel("dcc", metadata={"formulation": "dcc"})
    _lambda_block(model, spec)
    _disaggregated(model, spec)
    m = len(spec.simplices)
    for i in range(1, m + 1):
        model.binary(f"y_{i}")
    for i, s in enumerate(spec.simplices, start=1):
        model.constrain(f"dcc_{i}", [(f"lamd_{i}_{v}", 1.0) for v in s] + [(f"y_{i}", -1.0)], "=", 0.0)
    model.constrain("choice", [(f"y_{i}", 1.0) for i in range(1, m + 1)], "=", 1.0)
    _link(model, spec)
    return model


def gray_code(i: int) -> int:
    return i ^ (i >> 1)


def _build_dlog(spec: DisjunctionSpec) -> MilpModel:
    """Disaggregated logarithmic model: set i gets the Gray code of i - 1 on ceil(log2 m) bits."""
    model = MilpModel("dlog", metadata={"formulation": "dlog"})
    _lambda_block(model, spec)
    _disaggregated(model, spec)
    m = len(spec.simplices)
    bits = math.ceil(math.log2(m)) if m > 1 else 0
    for j in range(1, bits + 1):
        model.binary(f"z_{j}")
    model.constrain("convexity", [(f"lamd_{i}_{v}", 1.0) for i, s in enumerate(spec.simplices, start=1)
                                  for v in s], "=", 1.0)
    codes = [gray_code(i) for i in range(m)]
    for j in range(1, bits + 1):
        ones = [(f"lamd_{i}_{v}", 1.0) for i, s in enumerate(spec.simplices, start=1)
                if (codes[i - 1] >> (j - 1)) & 1 for v in s]
        zeros = [(f"lamd_{i}_{v}", 1.0) for i, s in enumerate(spec.simplices, start=1)
                 if not (codes[i - 1] >> (j - 1)) & 1 for v in s]
        model.constrain(f"bit_{j}_1", ones + [(f"z_{j}", -1.0)], "<=", 0.0)
        model.constrain(f"bit_{j}_0", zeros + [(f"z_{j}", 1.0)], "<=", 1.0)
    _link(model, spec)
    return model


def _build_mc(spec: DisjunctionSpec) -> MilpModel:
    """Multiple choice: a copy (xc_i, fc_i) of the output per simplex, a convex
    combination of the simplex's vertices with weights mu_i_v summing to y_i."""
    if spec.points is None or spec.values is None:
        raise SpecIncomplete("the multiple-choice model needs vertex coordinates and values")
    points = np.asarray(spec.points, dtype=float)
    values = np.asarray(spec.values, dtype=float)
    d, m = spec.dim, len(spec.simplices)
    model = MilpModel("mc", metadata={"formulation": "mc"})
    for i in range(1, m + 1):
        model.binary(f"y_{i}")
    for i, s in enumerate(spec.simplices, start=1):
        for v in s:
            model.continuous(f"mu_{i}_{v}", 0.0, 1.0)
        for k in range(1, d + 1):
            model.continuous(f"xc_{i}_{k}", -math.inf, math.inf)
        model.continuous(f"fc_{i}", -math.inf, math.inf)
    for k in range(1, d + 1):
        model.continuous(f"x_{k}", -math.inf, math.inf)
    model.continuous("fhat", -math.inf, math.inf)

    model.constrain("choice", [(f"y_{i}", 1.0) for i in range(1, m + 1)], "=", 1.0)
    for i, s in enumerate(spec.simplices, start=1):
        model.constrain(f"mc_sum_{i}", [(f"mu_{i}_{v}", 1.0) for v in s] + [(f"y_{i}", -1.0)], "=", 0.0)
        for k in range(1, d + 1):
            model.constrain(f"mc_x_{i}_{k}", [(f"xc_{i}_{k}", 1.0)]
                            + [(f"mu_{i}_{v}", -points[v, k - 1]) for v in s], "=", 0.0)
        model.constrain(f"mc_f_{i}", [(f"fc_{i}", 1.0)] + [(f"mu_{i}_{v}", -values[v]) for v in s], "=", 0.0)
    for k in range(1, d + 1):
        model.constrain(f"out_x_{k}", [(f"x_{k}", 1.0)] + [(f"xc_{i}_{k}", -1.0) for i in range(1, m + 1)],
                        "=", 0.0)
    model.constrain("out_f", [("fhat", 1.0)] + [(f"fc_{i}", -1.0) for i in range(1, m + 1)], "=", 0.0)
    model.metadata["blocks"] = [{"vertices": [v], "vars": [f"mu_{i}_{v}"]}
                                for i, s in enumerate(spec.simplices, start=1) for v in s]
    return model


# -- incremental model ------------------------------------------------------------------

@dataclass
class IncOrdering:
    order: List[int]                    # set indices (0-based) along the path
    vertex_orders: List[Tuple[int, ...]]  # per position: entry vertex first, exit vertex last
    facet_path: bool


def _search_path(sets: List[frozenset], facet: bool, budget: int) -> Optional[List[Tuple[int, Optional[int]]]]:
    """Hamiltonian path over sets where consecutive sets share a link vertex different from the previous link.

    With facet=True consecutive sets must share all but one vertex.
    Returns [(set index, link vertex to the next set)] or None.
    """
    m = len(sets)
    need = len(sets[0]) - 1 if facet else 1
    neighbors = [[j for j in range(m) if j != i and len(sets[i] & sets[j]) >= need] for i in range(m)]
    expanded = 0

    def extend(path: List[Tuple[int, Optional[int]]], visited: set, entry: Optional[int]):
        nonlocal expanded
        if len(path) == m:
            return path
        expanded += 1
        if expanded > budget:
            return None
        current = path[-1][0]
        options = [j for j in neighbors[current] if j not in visited]
        options.sort(key=lambda j: (sum(1 for k in neighbors[j] if k not in visited), j))
        for j in options:
            for link in sorted(sets[current] & sets[j]):
                if link == entry:
                    continue
                visited.add(j)
                path[-1] = (current, link)
                found = extend(path + [(j, None)], visited, link)
                if found is not None:
                    return found
                visited.discard(j)
                if expanded > budget:
                    return None
            path[-1] = (current, None)
        return None

    for start in sorted(range(m), key=lambda i: (len(neighbors[i]), i)):
        found = extend([(start, None)], {start}, None)
        if found is not None:
            return found
        if expanded > budget:
            break
    return None


def inc_ordering(simplices: Sequence[Sequence[int]], budget: int = ORDERING_BUDGET,
                 allow_relaxed: bool = True) -> IncOrdering:
    """Order the sets along a path of shared facets, or of shared vertices when no facet path is found."""
    sets = [frozenset(s) for s in simplices]
    if not sets:
        raise OrderingUnavailable("no sets to order")
    facet = True
    path = _search_path(sets, facet=True, budget=budget)
    if path is None:
        if not allow_relaxed:
            raise OrderingUnavailable("no Hamiltonian path of shared facets found")
        facet = False
        path = _search_path(sets, facet=False, budget=budget)
        if path is None:
            raise OrderingUnavailable("no ordering where consecutive sets share a vertex was found")
        log.warning("inc: no facet path found, using an ordering where consecutive sets share a vertex")

    orders = []
    entry = None
    for idx, link in path:
        members = sorted(sets[idx])
        first = entry if entry is not None else next(v for v in members if v != link)
        last = link if link is not None else next(v for v in reversed(members) if v != first)
        middle = [v for v in members if v not in (first, last)]
        orders.append(tuple([first] + middle + [last]))
        entry = link
    return IncOrdering([idx for idx, _ in path], orders, facet)


def _build_inc(spec: DisjunctionSpec) -> MilpModel:
    """Incremental model over a path of sets T_1..T_m with v^i_d = v^{i+1}_0.

    delta_i_j in [0, 1] are decreasing in j; y_i links consecutive sets
    (delta_{i+1}_1 <= y_i <= delta_i_d). lam_v is recovered as the
    telescoped coefficient of v, so the model carries the same lam block
    as the others.
    """
    ordering = inc_ordering(spec.simplices)
    orders = ordering.vertex_orders
    m, d = len(orders), len(orders[0]) - 1
    model = MilpModel("inc", metadata={"formulation": "inc", "facet_path": ordering.facet_path,
                                       "order": ordering.order})
    _lambda_block(model, spec)
    for i in range(1, m + 1):
        for j in range(1, d + 1):
            model.continuous(f"delta_{i}_{j}", 0.0, 1.0)
    for i in range(1, m):
        model.binary(f"y_{i}")

    for i in range(1, m + 1):
        for j in range(1, d):
            model.constrain(f"inc_order_{i}_{j}", [(f"delta_{i}_{j + 1}", 1.0), (f"delta_{i}_{j}", -1.0)], "<=", 0.0)
    for i in range(1, m):
        model.constrain(f"inc_fill_{i}", [(f"y_{i}", 1.0), (f"delta_{i}_{d}", -1.0)], "<=", 0.0)
        model.constrain(f"inc_next_{i}", [(f"delta_{i + 1}_1", 1.0), (f"y_{i}", -1.0)], "<=", 0.0)

    coef: Dict[int, Dict[str, float]] = {v: {} for v in spec.vertices}
    const: Dict[int, float] = {v: 0.0 for v in spec.vertices}

    def add(v: int, name: str, c: float) -> None:
        coef[v][name] = coef[v].get(name, 0.0) + c

    const[orders[0][0]] += 1.0
    add(orders[0][0], "delta_1_1", -1.0)
    for i in range(1, m + 1):
        order = orders[i - 1]
        for j in range(1, d + 1):
            add(order[j], f"delta_{i}_{j}", 1.0)
            if j < d:
                add(order[j], f"delta_{i}_{j + 1}", -1.0)
            elif i < m:
                add(order[j], f"delta_{i + 1}_1", -1.0)
    for v in spec.vertices:
        terms = [(f"lam_{v}", 1.0)] + [(name, -c) for name, c in coef[v].items()]
        model.constrain(f"inc_lam_{v}", terms, "=", const[v])
    if spec.points is not None and spec.values is not None:
        _output_block(model, spec)
    return model


_BUILDERS = {"cc": _build_cc, "dcc": _build_dcc, "dlog": _build_dlog, "mc": _build_mc, "inc": _build_inc}


def build_baseline(spec: DisjunctionSpec, which: str, with_output: bool = False) -> MilpModel:
    """Textbook formulations: dlog (log-many binaries), inc (m - 1), mc, dcc and cc (m each).

    mc and inc always carry the x and fhat outputs (inc only when
    coordinates are known).
    """
    if which not in _BUILDERS:
        raise ValidationError(f"unknown baseline '{which}', choose one of {BASELINES}")
    spec.validate()
    model = _BUILDERS[which](spec)
    if with_output and which in ("cc", "dcc", "dlog"):
        _output_block(model, spec)
    log.info("%s: %r", which, model)
    return model


def build_formulation(spec: DisjunctionSpec, which: str, with_output: bool = False) -> MilpModel:
    if which == "gib":
        return build_gib(spec, with_output=with_output)
    return build_baseline(spec, which, with_output=with_output)
