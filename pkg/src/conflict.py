"""Conflict hypergraphs of set systems and rank reduction by edge splitting.

A vertex set is feasible when some S_i contains it. The conflict hypergraph
holds the minimal infeasible sets; for a simplicial partition of dimension d
none has more than d + 1 elements, so candidates are enumerated by size
2..d+1, each one grown from a feasible set one element smaller.
"""

import itertools
import logging
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from src.errors import NotAnEdge, SizeLimit, ValidationError
from src.mesh import to_set_system
from src.models.hypergraph import ConflictHypergraph, SplitRecord
from src.models.partition import SetSystem, SimplicialPartition

log = logging.getLogger(__name__)

DEFAULT_BUDGET = 10 ** 8
VALUE_RULES = ("preserve", "evaluate")


class FeasibilityIndex:
    """Answers "is X contained in some set?" through the sets incident to one of its vertices."""

    def __init__(self, sets: Iterable[Sequence[int]]):
        self.sets: List[frozenset] = [frozenset(s) for s in sets]
        self.incident: Dict[int, List[int]] = {}
        for i, s in enumerate(self.sets):
            for v in s:
                self.incident.setdefault(v, []).append(i)
        self.neighbors: Dict[int, Set[int]] = {
            v: set().union(*(self.sets[i] for i in idx)) - {v} for v, idx in self.incident.items()
        }

    def feasible(self, subset) -> bool:
        subset = set(subset)
        if not subset:
            return True
        pivot = min(subset, key=lambda x: len(self.incident.get(x, ())))
        return any(subset <= self.sets[i] for i in self.incident.get(pivot, ()))

    def sets_containing(self, *vertices: int) -> List[frozenset]:
        if not vertices:
            return list(self.sets)
        return [self.sets[i] for i in self.incident.get(vertices[0], ()) if set(vertices) <= self.sets[i]]


def feasible_subsets(sets: Iterable[Sequence[int]], k: int) -> Set[Tuple[int, ...]]:
    """All k-subsets of the given sets."""
    out = set()
    for s in sets:
        out.update(itertools.combinations(sorted(s), k))
    return out


def build_conflict_hypergraph(system: SetSystem, d: int, budget: int = DEFAULT_BUDGET) -> ConflictHypergraph:
    """Exact minimal infeasible sets of size 2..d+1.

    A candidate of size k is a feasible (k-1)-set F extended by a vertex
    v > max(F) that is feasible together with every element of F. The budget
    bounds the number of candidates examined.
    """
    index = FeasibilityIndex(system.sets)
    vertices = list(system.ground_set)
    edges = []
    examined = 0

    # size 2: pairs with no common set
    for a_pos, a in enumerate(vertices):
        examined += len(vertices) - a_pos - 1
        if examined > budget:
            raise SizeLimit(f"conflict enumeration exceeded the budget of {budget} candidates")
        near = index.neighbors.get(a, set())
        edges.extend((a, b) for b in vertices[a_pos + 1:] if b not in near)

    for k in range(3, d + 2):
        current = feasible_subsets(system.sets, k - 1)
        for base in sorted(current):
            options = set.intersection(*(index.neighbors.get(x, set()) for x in base))
            for v in sorted(x for x in options if x > base[-1]):
                examined += 1
                if examined > budget:
                    raise SizeLimit(f"conflict enumeration exceeded the budget of {budget} candidates")
                cand = base + (v,)
                if index.feasible(cand):
                    continue
                if all(sub in current for sub in itertools.combinations(cand, k - 1)):
                    edges.append(cand)
    hg = ConflictHypergraph(vertices, edges)
    log.debug("conflict hypergraph: %d vertices, %d edges, rank %d, %d candidates",
              len(vertices), len(hg.edges), hg.rank, examined)
    return hg


def conflict_hypergraph(partition: SimplicialPartition, budget: int = DEFAULT_BUDGET) -> ConflictHypergraph:
    return build_conflict_hypergraph(to_set_system(partition), partition.dim, budget)


# -- splitting ----------------------------------------------------------------

def split_edge(partition: SimplicialPartition, u: int, v: int, value_rule: str = "preserve",
               oracle: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> Tuple[SimplicialPartition, SplitRecord]:
    """Split edge (u, v) at its midpoint w.

    Every simplex containing u and v is replaced in place by S - {u} + {w}
    followed by S - {v} + {w}. With value_rule "preserve" f(w) is the
    interpolant's value at w; "evaluate" calls oracle there, which changes
    the approximant.
    """
    if value_rule not in VALUE_RULES:
        raise ValidationError(f"unknown value_rule '{value_rule}', choose one of {VALUE_RULES}")
    if u == v or not any(u in s and v in s for s in partition.simplices):
        raise NotAnEdge(f"({u}, {v}) is not an edge of the partition")
    w = partition.num_vertices
    mid = 0.5 * (partition.points[u] + partition.points[v])
    if value_rule == "evaluate":
        if oracle is None:
            raise ValidationError("value_rule 'evaluate' needs a function oracle")
        log.warning("split (%d, %d): evaluating f at the midpoint changes the approximant", u, v)
        value = float(np.asarray(oracle(mid[None, :])).reshape(-1)[0])
    else:
        value = 0.5 * (partition.values[u] + partition.values[v])

    simplices = []
    for s in partition.simplices:
        if u in s and v in s:
            simplices.append(tuple(x for x in s if x != u) + (w,))
            simplices.append(tuple(x for x in s if x != v) + (w,))
        else:
            simplices.append(s)
    out = SimplicialPartition(np.vstack([partition.points, mid]), np.append(partition.values, value),
                              simplices, partition.provenance)
    return out, SplitRecord(edge=(min(u, v), max(u, v)), w=w)


class _SplitView:
    """Feasibility in the set system obtained by splitting (u, v) with a new vertex w, without building it."""

    def __init__(self, index: FeasibilityIndex, u: int, v: int, w: int):
        self.index = index
        self.u, self.v, self.w = u, v, w
        self.star = index.sets_containing(u, v)
        if not self.star:
            raise NotAnEdge(f"({u}, {v}) is not an edge of the partition")
        self.star_vertices = sorted(set().union(*self.star))

    def feasible(self, subset) -> bool:
        subset = set(subset)
        if self.u in subset and self.v in subset:
            return False
        if self.w in subset:
            rest = subset - {self.w}
            return any(rest <= s for s in self.star)
        return self.index.feasible(subset)

    def created_edges(self, vertices: Iterable[int], d: int) -> List[Tuple[int, ...]]:
        """Minimal infeasible sets of the split system that are not minimal infeasible before it."""
        u, v, w = self.u, self.v, self.w
        near = set(self.star_vertices)
        out = [(min(u, v), max(u, v))]
        out.extend((x, w) for x in vertices if x not in near and x != w)
        for size in range(2, d + 1):
            for rest in itertools.combinations(self.star_vertices, size):
                cand = rest + (w,)
                if self.feasible(cand):
                    continue
                if all(self.feasible(sub) for sub in itertools.combinations(cand, size)):
                    out.append(cand)
        return out


def count_split_effect(partition: SimplicialPartition, hg: ConflictHypergraph, u: int, v: int,
                       k: int) -> Tuple[int, int]:
    """(r, c): rank-k conflicts eliminated and created by splitting (u, v)."""
    removed = sum(1 for e in hg.edges_of_size(k) if u in e and v in e)
    view = _SplitView(FeasibilityIndex(partition.simplices), u, v, partition.num_vertices)
    created = sum(1 for e in view.created_edges(hg.vertices, partition.dim) if len(e) == k)
    return removed, created


def update_after_split(hg: ConflictHypergraph, before: SimplicialPartition, u: int, v: int) -> ConflictHypergraph:
    """Conflict hypergraph of split_edge(before, u, v) derived from hg.

    Edges containing both u and v disappear; everything else stays, and the
    new minimal infeasible sets are {u, v}, the pairs {w, x} with x outside
    the star of (u, v), and the sets containing w found in that star.
    """
    w = before.num_vertices
    view = _SplitView(FeasibilityIndex(before.simplices), u, v, w)
    removed = [e for e in hg.edges if u in e and v in e]
    return hg.replace(removed, view.created_edges(hg.vertices, before.dim), new_vertices=[w])


def _pairs_in_edges(edges: Iterable[Tuple[int, ...]]) -> List[Tuple[int, int]]:
    pairs = set()
    for e in edges:
        pairs.update(itertools.combinations(e, 2))
    return sorted(pairs)


def reduce_rank(partition: SimplicialPartition, value_rule: str = "preserve",
                oracle: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                budget: int = DEFAULT_BUDGET, debug: bool = False,
                max_splits: Optional[int] = None) -> Tuple[SimplicialPartition, List[SplitRecord]]:
    """Greedy rank reduction.

    While the rank k is at least 3, split the edge (u, v) in a rank-k
    conflict with the largest r - c (ties: smallest pair) and stop once no
    split has r - c > 0. In debug mode the hypergraph is rebuilt from
    scratch after every split instead of being updated.
    """
    if partition.dim < 2:
        return partition, []
    if max_splits is None:
        max_splits = 10 * partition.num_vertices + 100
    hg = conflict_hypergraph(partition, budget)
    records: List[SplitRecord] = []
    while hg.rank >= 3:
        k = hg.rank
        best = None
        for u, v in _pairs_in_edges(e for e in hg.edges if len(e) >= k):
            r, c = count_split_effect(partition, hg, u, v, k)
            if best is None or r - c > best[0]:
                best = (r - c, u, v, r, c)
        delta, u, v, r, c = best
        if delta <= 0:
            log.info("rank reduction stopped at rank %d: no split improves (best delta %d)", k, delta)
            break
        if len(records) >= max_splits:
            log.warning("rank reduction stopped after %d splits at rank %d", max_splits, k)
            break
        before = partition
        partition, record = split_edge(partition, u, v, value_rule, oracle)
        record.k, record.removed, record.created = k, r, c
        records.append(record)
        if debug:
            hg = conflict_hypergraph(partition, budget)
        else:
            hg = update_after_split(hg, before, u, v)
        log.debug("split (%d, %d) -> w=%d: rank-%d edges -%d +%d", u, v, record.w, k, r, c)
    log.info("rank reduction: %d splits, final rank %d", len(records), hg.rank)
    return partition, records
