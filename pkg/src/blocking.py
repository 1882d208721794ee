"""Blocking hypergraph of the rank >= 3 conflicts and its colouring.

A set of simplices is blocking when the union of their vertex sets contains a
minimal infeasible set of size >= 3. Colouring the simplices so that no
minimal blocking set is monochromatic lets every colour class be encoded by
one binary.
"""

import itertools
import logging
from typing import List, Optional, Sequence

import networkx as nx

from src.conflict import DEFAULT_BUDGET
from src.errors import SizeLimit
from src.models.coloring import BlockingHypergraph, Coloring
from src.models.hypergraph import ConflictHypergraph
from src.models.partition import SetSystem
from src.sat_solver import Cnf, solve_cnf

log = logging.getLogger(__name__)


def build_blocking_hypergraph(system: SetSystem, hg: ConflictHypergraph, d: int,
                              budget: int = DEFAULT_BUDGET) -> BlockingHypergraph:
    """Minimal blocking sets of size <= d + 1.

    For every conflict C with |C| >= 3 the candidates are the sets of
    2..min(d+1, |C|) simplices meeting C whose vertex union covers C. A
    candidate is kept if no member can be dropped while still covering
    some conflict of size >= 3.
    """
    sets = [frozenset(s) for s in system.sets]
    higher = [frozenset(c) for c in hg.higher_edges]
    if not higher:
        return BlockingHypergraph(len(sets))

    examined = 0
    blocking = set()
    for conflict in higher:
        touching = [i for i, s in enumerate(sets) if s & conflict]
        for size in range(2, min(d + 1, len(conflict)) + 1):
            for combo in itertools.combinations(touching, size):
                examined += 1
                if examined > budget:
                    raise SizeLimit(f"blocking enumeration exceeded the budget of {budget} candidates")
                if conflict <= frozenset().union(*(sets[i] for i in combo)):
                    blocking.add(combo)

    def spans(combo) -> bool:
        union = frozenset().union(*(sets[i] for i in combo))
        return any(c <= union for c in higher)

    edges = [b for b in blocking
             if not any(spans(b[:k] + b[k + 1:]) for k in range(len(b)) if len(b) > 1)]
    bh = BlockingHypergraph(len(sets), edges)
    log.debug("blocking hypergraph: %d edges from %d candidates", len(bh.edges), examined)
    return bh


def coloring_cnf(bh: BlockingHypergraph, q: int) -> Cnf:
    """Variable S*q + c is true when simplex S takes colour c (0-based S and c, 1-based variables).

    Clauses: every simplex takes a colour; no blocking set is monochromatic in any colour.
    """
    def var(s: int, c: int) -> int:
        return s * q + c + 1

    cnf = Cnf(num_vars=bh.num_simplices * q)
    for s in range(bh.num_simplices):
        cnf.add([var(s, c) for c in range(q)])
    for edge in bh.edges:
        for c in range(q):
            cnf.add([-var(s, c) for s in edge])
    return cnf


def _decode(model, num_simplices: int, q: int) -> List[int]:
    gamma = []
    for s in range(num_simplices):
        gamma.append(next(c + 1 for c in range(q) if model[s * q + c + 1]))
    return gamma


def greedy_rank2_colors(bh: BlockingHypergraph) -> int:
    """Colours used by a largest-first greedy colouring of the rank-2 blocking edges."""
    graph = nx.Graph()
    graph.add_nodes_from(range(bh.num_simplices))
    graph.add_edges_from(bh.rank2_edges)
    colors = nx.greedy_color(graph, strategy="largest_first")
    return max(colors.values(), default=0) + 1


def sat_coloring(bh: BlockingHypergraph, q: int) -> Optional[List[int]]:
    model = solve_cnf(coloring_cnf(bh, q))
    if model is None:
        return None
    return _decode(model, bh.num_simplices, q)


def color_blocking(bh: BlockingHypergraph, simplices: Sequence[Sequence[int]]) -> Coloring:
    """Colouring with the fewest colours such that no blocking edge is monochromatic.

    The greedy colour count of the rank-2 part is the starting q; q is then
    lowered by one while the SAT instance stays satisfiable, or raised by one
    until it becomes satisfiable.
    """
    if not bh.edges:
        return Coloring.from_gamma([1] * bh.num_simplices, simplices)
    q = max(greedy_rank2_colors(bh), 1)
    gamma = sat_coloring(bh, q)
    if gamma is not None:
        while q > 1:
            lower = sat_coloring(bh, q - 1)
            if lower is None:
                break
            q, gamma = q - 1, lower
    else:
        while gamma is None:
            q += 1
            gamma = sat_coloring(bh, q)
    coloring = Coloring.from_gamma(gamma, simplices)
    log.info("blocking colouring: q=%d (greedy start %d)", coloring.q, greedy_rank2_colors(bh))
    return coloring
