"""Biclique covers of the rank-2 conflict graph.

The cover loop starts with unit weights on every conflict edge, repeatedly
picks a maximum-weight biclique and zeroes the weights of the edges it
covers. Bicliques come from an exact branch-and-bound search or, for planar
meshes, from cutting the mesh's dual graph with random straight lines.
"""

import itertools
import json
import logging
import math
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from src.errors import Infeasible, IoError, NoCandidate, ParseError, ValidationError
from src.mesh import mesh_edges
from src.models.biclique import Biclique, BicliqueCover, Edge, edge_key
from src.models.hypergraph import ConflictHypergraph
from src.models.milp_model import MilpModel
from src.models.partition import SimplicialPartition

log = logging.getLogger(__name__)

STRATEGIES = ("exact", "geom_then_exact")
DEFAULT_GEOM_ITERATIONS = 4
DEFAULT_LINES = 1000
EXHAUSTIVE_COMPONENTS = 12
LINE_RETRIES = 100
CIRCLE_MARGIN = 1.1
CENTROID_CLEARANCE = 1e-9

Weights = Dict[Edge, float]


def conflict_graph(hg: ConflictHypergraph) -> nx.Graph:
    g = nx.Graph()
    g.add_nodes_from(hg.vertices)
    g.add_edges_from(hg.rank2_edges)
    return g


def unit_weights(g: nx.Graph) -> Weights:
    return {edge_key(u, v): 1.0 for u, v in g.edges}


# -- exact search ---------------------------------------------------------------

class _ExactSearch:
    """Depth-first search over A in increasing vertex order with B = N(A).

    For a fixed A the best B is its whole common neighbourhood since
    weights are nonnegative. A node is pruned when even adding every
    remaining candidate to A could not beat the incumbent.
    """

    def __init__(self, g: nx.Graph, weights: Weights):
        self.nodes = sorted(g.nodes)
        pos = {v: i for i, v in enumerate(self.nodes)}
        n = len(self.nodes)
        self.adj = [0] * n
        self.w = [[0.0] * n for _ in range(n)]
        for u, v in g.edges:
            i, j = pos[u], pos[v]
            self.adj[i] |= 1 << j
            self.adj[j] |= 1 << i
            self.w[i][j] = self.w[j][i] = float(weights.get(edge_key(u, v), 0.0))
        self.best_value = -1.0
        self.best: Optional[Tuple[int, int]] = None
        self.nodes_visited = 0

    @staticmethod
    def _bits(mask: int):
        while mask:
            low = mask & -mask
            yield low.bit_length() - 1
            mask ^= low

    def run(self) -> Tuple[Biclique, float]:
        n = len(self.nodes)
        full = (1 << n) - 1
        self._extend(0, full, [0.0] * n, list(range(n)))
        if self.best is None:
            raise Infeasible("graph has no edges, so no biclique exists")
        a_mask, b_mask = self.best
        A = tuple(self.nodes[i] for i in self._bits(a_mask))
        B = tuple(self.nodes[i] for i in self._bits(b_mask))
        return Biclique(A, B), self.best_value

    def _extend(self, a_mask: int, na_mask: int, acc: List[float], cand: List[int]) -> None:
        for k, c in enumerate(cand):
            self.nodes_visited += 1
            new_na = na_mask & self.adj[c]
            if not new_na:
                continue
            new_acc = list(acc)
            value = 0.0
            for b in self._bits(new_na):
                new_acc[b] += self.w[c][b]
                value += new_acc[b]
            new_a = a_mask | (1 << c)
            if value > self.best_value:
                self.best_value = value
                self.best = (new_a, new_na)
            rest = [x for x in cand[k + 1:] if self.adj[x] & new_na]
            if not rest:
                continue
            bound = 0.0
            for b in self._bits(new_na):
                bound += new_acc[b] + sum(self.w[x][b] for x in rest if (self.adj[x] >> b) & 1)
            if bound <= self.best_value:
                continue
            self._extend(new_a, new_na, new_acc, rest)


def max_weight_biclique_exact(g: nx.Graph, weights: Optional[Weights] = None) -> Biclique:
    """A biclique of g maximizing the total weight of its covered edges.

    Among bicliques of equal weight the one whose A comes first in the
    search order (increasing vertex ids) wins.
    """
    if g.number_of_edges() == 0:
        raise Infeasible("graph has no edges, so no biclique exists")
    weights = unit_weights(g) if weights is None else weights
    if any(w < 0 for w in weights.values()):
        raise ValidationError("biclique weights must be nonnegative")
    search = _ExactSearch(g, weights)
    biclique, value = search.run()
    log.debug("exact biclique: weight %g, |A|=%d |B|=%d, %d nodes",
              value, len(biclique.A), len(biclique.B), search.nodes_visited)
    return biclique


def brute_force_biclique(g: nx.Graph, weights: Weights) -> float:
    """Best biclique weight over all A/B/out assignments. Exponential; for small test graphs."""
    nodes = sorted(g.nodes)
    best = -1.0
    for labels in itertools.product((0, 1, 2), repeat=len(nodes)):
        A = [v for v, s in zip(nodes, labels) if s == 1]
        B = [v for v, s in zip(nodes, labels) if s == 2]
        if not A or not B or not all(g.has_edge(a, b) for a in A for b in B):
            continue
        best = max(best, sum(weights.get(edge_key(a, b), 0.0) for a in A for b in B))
    return best


# -- planar line cuts -----------------------------------------------------------

class _DualCut:
    """Dual graph of a triangulation (triangles sharing an edge) and the mesh edge graph."""

    def __init__(self, partition: SimplicialPartition):
        if partition.dim != 2:
            raise ValidationError(f"line cuts need a planar mesh, got dimension {partition.dim}")
        self.partition = partition
        self.centroids = np.array([partition.coords(s).mean(axis=0) for s in partition.simplices])
        owners: Dict[Edge, List[int]] = {}
        for t, s in enumerate(partition.simplices):
            for u, v in itertools.combinations(s, 2):
                owners.setdefault((u, v), []).append(t)
        pairs, shared = [], []
        for e, ts in sorted(owners.items()):
            if len(ts) == 2:
                pairs.append(ts)
                shared.append(e)
        self.dual_pairs = np.array(pairs, dtype=int).reshape(-1, 2)
        self.shared_edges = shared
        self.graph = nx.Graph()
        self.graph.add_nodes_from(range(partition.num_vertices))
        self.graph.add_edges_from(mesh_edges(partition))
        lo, hi = partition.bounding_box()
        self.center = 0.5 * (lo + hi)
        self.radius = CIRCLE_MARGIN * 0.5 * float(np.linalg.norm(hi - lo))

    def sides(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        direction = q - p
        normal = np.array([-direction[1], direction[0]]) / np.linalg.norm(direction)
        return (self.centroids - p) @ normal

    def components(self, crossed: np.ndarray) -> List[List[int]]:
        """Connected components of the mesh graph after removing both ends of every crossed shared edge."""
        removed = set()
        for k in np.flatnonzero(crossed):
            removed.update(self.shared_edges[k])
        rest = self.graph.subgraph(v for v in self.graph.nodes if v not in removed)
        return sorted((sorted(c) for c in nx.connected_components(rest)), key=lambda c: c[0])

    def crossed(self, p: np.ndarray, q: np.ndarray) -> np.ndarray:
        s = self.sides(p, q) > 0
        if not len(self.dual_pairs):
            return np.zeros(0, dtype=bool)
        return s[self.dual_pairs[:, 0]] != s[self.dual_pairs[:, 1]]

    def random_line(self, rng: np.random.Generator) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Two random points on the enclosing circle, re-rolled while the line passes through a centroid."""
        for _ in range(LINE_RETRIES):
            theta = rng.uniform(0.0, 2.0 * math.pi, size=2)
            if abs(math.sin(0.5 * (theta[0] - theta[1]))) < 1e-6:
                continue
            p = self.center + self.radius * np.array([math.cos(theta[0]), math.sin(theta[0])])
            q = self.center + self.radius * np.array([math.cos(theta[1]), math.sin(theta[1])])
            if np.min(np.abs(self.sides(p, q))) > CENTROID_CLEARANCE * self.radius:
                return p, q
        return None


def _component_weights(components: Sequence[Sequence[int]], weights: Weights) -> np.ndarray:
    where = {v: i for i, comp in enumerate(components) for v in comp}
    k = len(components)
    cw = np.zeros((k, k))
    for (u, v), w in weights.items():
        if w and u in where and v in where and where[u] != where[v]:
            i, j = where[u], where[v]
            cw[i, j] += w
            cw[j, i] += w
    return cw


def _best_bipartition(cw: np.ndarray) -> Tuple[float, List[int]]:
    """Two-group split of the components maximizing the weight between groups; returns (weight, group-1 ids)."""
    k = cw.shape[0]
    if k <= EXHAUSTIVE_COMPONENTS:
        best = (-1.0, [0])
        # component 0 stays in group 0
        for mask in range(1, 1 << (k - 1)):
            group = np.array([0] + [(mask >> (i - 1)) & 1 for i in range(1, k)], dtype=bool)
            value = float(cw[np.ix_(~group, group)].sum())
            if value > best[0]:
                best = (value, [i for i in range(k) if group[i]])
        return best
    group = np.zeros(k, dtype=bool)
    order = np.argsort(-cw.sum(axis=1), kind="stable")
    group[order[0]] = True
    for i in order[1:]:
        to_a = cw[i, group].sum()
        to_b = cw[i, ~group].sum()
        group[i] = to_b > to_a
    improved = True
    while improved:
        improved = False
        for i in range(k):
            same = cw[i, group == group[i]].sum()
            other = cw[i, group != group[i]].sum()
            if same > other:
                group[i] = not group[i]
                if group.all() or not group.any():
                    group[i] = not group[i]
                    continue
                improved = True
    value = float(cw[np.ix_(~group, group)].sum())
    return value, [i for i in range(k) if group[i]]


def _cut_to_biclique(components: List[List[int]], weights: Weights) -> Optional[Tuple[Biclique, float]]:
    if len(components) < 2:
        return None
    value, chosen = _best_bipartition(_component_weights(components, weights))
    A = [v for i in chosen for v in components[i]]
    B = [v for i, comp in enumerate(components) if i not in chosen for v in comp]
    return Biclique(tuple(A), tuple(B)), value


def line_cut_biclique(partition: SimplicialPartition, p: Sequence[float], q: Sequence[float],
                      weights: Optional[Weights] = None) -> Optional[Biclique]:
    """Biclique of the conflict graph obtained from the line through p and q, or None if the cut leaves one piece.

    Removing the endpoints of the mesh edges shared by the triangles the
    line separates splits the mesh graph; vertices in different pieces
    share no triangle, so every pair across pieces is a conflict.
    """
    cut = _DualCut(partition)
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    comps = cut.components(cut.crossed(p, q))
    weights = weights if weights is not None else _all_pairs(comps)
    found = _cut_to_biclique(comps, weights)
    return found[0] if found else None


def _all_pairs(components: List[List[int]]) -> Weights:
    out: Weights = {}
    for ca, cb in itertools.combinations(components, 2):
        for u in ca:
            for v in cb:
                out[edge_key(u, v)] = 1.0
    return out


def planar_cut_biclique(partition: SimplicialPartition, weights: Weights, n_lines: int = DEFAULT_LINES,
                        seed: Optional[int] = None, rng: Optional[np.random.Generator] = None) -> Biclique:
    """Best biclique by weight over n_lines random line cuts of a planar mesh."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    cut = _DualCut(partition)
    best: Optional[Tuple[Biclique, float]] = None
    seen: Dict[bytes, Optional[Tuple[Biclique, float]]] = {}
    for _ in range(n_lines):
        line = cut.random_line(rng)
        if line is None:
            continue
        crossed = cut.crossed(*line)
        if not crossed.any():
            continue
        key = np.packbits(crossed).tobytes()
        if key not in seen:
            seen[key] = _cut_to_biclique(cut.components(crossed), weights)
        found = seen[key]
        if found is not None and (best is None or found[1] > best[1]):
            best = found
    if best is None:
        raise NoCandidate(f"none of {n_lines} random lines split the mesh")
    log.debug("line cuts: %d distinct cuts, best weight %g", len(seen), best[1])
    return best[0]


# -- cover ------------------------------------------------------------------------

def cover_bicliques(g: nx.Graph, strategy: str = "exact", k: int = DEFAULT_GEOM_ITERATIONS,
                    n_lines: int = DEFAULT_LINES, seed: Optional[int] = None,
                    partition: Optional[SimplicialPartition] = None) -> BicliqueCover:
    """Cover every edge of g with bicliques.

    Weights start at 1 and drop to 0 once an edge is covered. With
    "geom_then_exact" the first k bicliques come from random line cuts of
    partition (whose mesh graph must be the complement of g), falling back
    to the exact search whenever the cut finds nothing new.
    """
    if strategy not in STRATEGIES:
        raise ValidationError(f"unknown cover strategy '{strategy}', choose one of {STRATEGIES}")
    if strategy == "geom_then_exact" and partition is None:
        raise ValidationError("strategy 'geom_then_exact' needs the planar mesh")
    weights = unit_weights(g)
    uncovered = len(weights)
    rng = np.random.default_rng(seed)
    bicliques: List[Biclique] = []
    while uncovered:
        biclique = None
        if strategy == "geom_then_exact" and len(bicliques) < k:
            try:
                biclique = planar_cut_biclique(partition, weights, n_lines, rng=rng)
            except NoCandidate as e:
                log.debug("%s; using the exact search", e)
            if biclique is not None and not biclique.is_valid_for(g):
                log.warning("line cut produced a non-biclique; the mesh does not match the graph")
                biclique = None
            elif biclique is not None and biclique.weight(weights) <= 0:
                biclique = None
        if biclique is None:
            biclique = max_weight_biclique_exact(g, weights)
        gained = 0
        for e in biclique.covered_edges:
            if weights.get(e, 0.0) > 0:
                weights[e] = 0.0
                gained += 1
        if gained == 0:
            raise Infeasible("biclique search made no progress")
        uncovered -= gained
        bicliques.append(biclique)
        log.debug("biclique %d: %dx%d covers %d new edges, %d left",
                  len(bicliques), len(biclique.A), len(biclique.B), gained, uncovered)
    cover = BicliqueCover(bicliques, g.number_of_edges())
    log.info("biclique cover (%s): %d bicliques for %d edges", strategy, len(cover), cover.num_host_edges)
    return cover


# -- MILP and I/O -------------------------------------------------------------------

def build_max_biclique_milp(g: nx.Graph, weights: Optional[Weights] = None) -> MilpModel:
    """Maximum-weight biclique as a MILP.

    x1_u / x2_u put u on side 1 / 2 and y_u_v marks edge {u, v} covered.
    Non-adjacent pairs (including u with itself) cannot sit on opposite
    sides, both sides are nonempty, and a covered edge has one endpoint on
    each side.
    """
    weights = unit_weights(g) if weights is None else weights
    nodes = sorted(g.nodes)
    edges = sorted(edge_key(u, v) for u, v in g.edges)
    model = MilpModel("max_biclique", metadata={"formulation": "max_biclique"})
    for u in nodes:
        model.binary(f"x1_{u}")
    for u in nodes:
        model.binary(f"x2_{u}")
    for u, v in edges:
        model.binary(f"y_{u}_{v}")
    for u in nodes:
        for v in nodes:
            if u == v or not g.has_edge(u, v):
                model.constrain(f"sep_{u}_{v}", [(f"x1_{u}", 1), (f"x2_{v}", 1)], "<=", 1)
    model.constrain("side_1", [(f"x1_{u}", 1) for u in nodes], ">=", 1)
    model.constrain("side_2", [(f"x2_{u}", 1) for u in nodes], ">=", 1)
    for u, v in edges:
        y = f"y_{u}_{v}"
        model.constrain(f"pair_{u}_{v}", [(f"x1_{u}", 1), (f"x2_{v}", 1), (y, -1)], "<=", 1)
        model.constrain(f"pair_{v}_{u}", [(f"x1_{v}", 1), (f"x2_{u}", 1), (y, -1)], "<=", 1)
        model.constrain(f"used_{u}_{u}_{v}", [(f"x1_{u}", 1), (f"x2_{u}", 1), (y, -1)], ">=", 0)
        model.constrain(f"used_{v}_{u}_{v}", [(f"x1_{v}", 1), (f"x2_{v}", 1), (y, -1)], ">=", 0)
        model.constrain(f"split1_{u}_{v}", [(f"x1_{u}", 1), (f"x1_{v}", 1), (y, -1)], ">=", 0)
        model.constrain(f"split2_{u}_{v}", [(f"x2_{u}", 1), (f"x2_{v}", 1), (y, -1)], ">=", 0)
    model.set_objective([(f"y_{u}_{v}", weights.get((u, v), 0.0)) for u, v in edges], "maximize")
    return model


def graph_to_dict(g: nx.Graph, weights: Optional[Weights] = None) -> dict:
    edges = sorted(edge_key(u, v) for u, v in g.edges)
    data = {"vertices": sorted(g.nodes), "edges": [list(e) for e in edges]}
    if weights is not None:
        data["weights"] = [weights.get(e, 0.0) for e in edges]
    return data


def graph_from_dict(data: dict) -> Tuple[nx.Graph, Optional[Weights]]:
    if not isinstance(data, dict):
        raise ParseError("graph document must be a JSON object")
    for key in ("vertices", "edges"):
        if not isinstance(data.get(key), list):
            raise ParseError("missing or non-list entry", field=key)
    g = nx.Graph()
    for i, v in enumerate(data["vertices"]):
        if not isinstance(v, int) or isinstance(v, bool):
            raise ParseError("vertex ids must be integers", field=f"vertices[{i}]")
        g.add_node(v)
    edges = []
    for i, e in enumerate(data["edges"]):
        if not (isinstance(e, list) and len(e) == 2 and all(x in g for x in e) and e[0] != e[1]):
            raise ParseError("edge must be a pair of distinct known vertices", field=f"edges[{i}]")
        g.add_edge(*e)
        edges.append(edge_key(*e))
    weights = None
    if "weights" in data:
        raw = data["weights"]
        if not isinstance(raw, list) or len(raw) != len(edges):
            raise ParseError("weights must list one number per edge", field="weights")
        weights = {}
        for i, (e, w) in enumerate(zip(edges, raw)):
            if not isinstance(w, (int, float)) or isinstance(w, bool) or w < 0:
                raise ParseError("weight must be a nonnegative number", field=f"weights[{i}]")
            weights[e] = float(w)
    return g, weights


def save_graph(g: nx.Graph, path, weights: Optional[Weights] = None) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(graph_to_dict(g, weights), fh, indent=2)
    except OSError as e:
        raise IoError(f"cannot write graph to {path}: {e}") from e


def load_graph(path) -> Tuple[nx.Graph, Optional[Weights]]:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as e:
        raise IoError(f"cannot read graph from {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON in {path}: {e.msg}", line=e.lineno) from e
    return graph_from_dict(data)
