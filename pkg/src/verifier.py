"""Brute-force check that a formulation's lambda supports are exactly the feasible vertex sets.

Every assignment of the binaries is fixed in turn and the continuous
bounds are tightened by interval propagation over the constraints. A
vertex block is open when one of its variables can still be nonzero. The
union U_b of the open blocks is the largest support the assignment allows.

  sound     every reachable U_b lies inside some S_i
  complete  every S_i lies inside some reachable U_b
"""

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from src.errors import SpecIncomplete, TooManyBinaries
from src.models.milp_model import MilpModel
from src.models.partition import SetSystem

log = logging.getLogger(__name__)

MAX_BINARIES = 24
OPEN_TOL = 1e-9
FEAS_TOL = 1e-9
MAX_PASSES = 60


@dataclass
class SupportViolation:
    assignment: Dict[str, int]
    support: Tuple[int, ...]
    conflict: Tuple[int, ...]


@dataclass
class VerificationReport:
    formulation: str
    num_binaries: int
    assignments: int
    reachable_assignments: int
    supports: List[Tuple[int, ...]] = field(default_factory=list)
    violations: List[SupportViolation] = field(default_factory=list)
    missing: List[Tuple[int, ...]] = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return not self.violations

    @property
    def complete(self) -> bool:
        return not self.missing

    @property
    def ok(self) -> bool:
        return self.sound and self.complete

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation,
            "num_binaries": self.num_binaries,
            "assignments": self.assignments,
            "reachable_assignments": self.reachable_assignments,
            "sound": self.sound,
            "complete": self.complete,
            "maximal_supports": [list(s) for s in self.supports],
            "violations": [{"assignment": v.assignment, "support": list(v.support), "conflict": list(v.conflict)}
                           for v in self.violations],
            "missing": [list(s) for s in self.missing],
        }

    def __repr__(self):
        return (f"<VerificationReport({self.formulation}: sound={self.sound}, complete={self.complete}, "
                f"{self.reachable_assignments}/{self.assignments} assignments)>")


class BoundPropagator:
    """Interval propagation for A x <= b over the model's constraints."""

    def __init__(self, model: MilpModel):
        self.names = [v.name for v in model.variables]
        index = {n: i for i, n in enumerate(self.names)}
        rows, rhs = [], []
        for c in model.constraints:
            row = np.zeros(len(self.names))
            for name, coef in c.terms:
                row[index[name]] += coef
            if c.sense in ("<=", "="):
                rows.append(row)
                rhs.append(c.rhs)
            if c.sense in (">=", "="):
                rows.append(-row)
                rhs.append(-c.rhs)
        self.A = np.array(rows).reshape(-1, len(self.names))
        self.b = np.array(rhs, dtype=float)
        self.nz = self.A != 0
        self.pos = self.A > 0
        self.divisor = np.where(self.nz, self.A, 1.0)
        self.lb = np.array([v.lb for v in model.variables], dtype=float)
        self.ub = np.array([v.ub for v in model.variables], dtype=float)
        self.index = index

    def propagate(self, fixed: Dict[str, float]) -> Optional[Tuple[np.ndarray, np.ndarray]]:
        """Tightened (lb, ub) with the given variables fixed, or None when the bounds become empty."""
        lb, ub = self.lb.copy(), self.ub.copy()
        for name, value in fixed.items():
            lb[self.index[name]] = ub[self.index[name]] = value
        A, b, nz, pos = self.A, self.b, self.nz, self.pos
        if not len(b):
            return lb, ub
        for _ in range(MAX_PASSES):
            with np.errstate(invalid="ignore"):
                contrib = np.where(pos, A * lb, A * ub)
            contrib = np.where(nz, contrib, 0.0)
            unbounded = np.isneginf(contrib)
            finite = np.where(unbounded, 0.0, contrib)
            n_unbounded = unbounded.sum(axis=1)
            min_activity = finite.sum(axis=1)
            if np.any((n_unbounded == 0) & (min_activity > b + FEAS_TOL)):
                return None
            residual = b[:, None] - (min_activity[:, None] - finite)
            usable = nz & ((n_unbounded[:, None] - unbounded) == 0)
            with np.errstate(divide="ignore", invalid="ignore"):
                limit = residual / self.divisor
            new_ub = np.minimum(ub, np.where(usable & pos, limit, np.inf).min(axis=0))
            new_lb = np.maximum(lb, np.where(usable & nz & ~pos, limit, -np.inf).max(axis=0))
            if np.any(new_lb > new_ub + FEAS_TOL):
                return None
            new_lb = np.minimum(new_lb, new_ub)
            change = max(_max_change(lb, new_lb), _max_change(ub, new_ub))
            lb, ub = new_lb, new_ub
            if change < 1e-12:
                break
        return lb, ub


def _max_change(old: np.ndarray, new: np.ndarray) -> float:
    both = np.isfinite(old) & np.isfinite(new)
    if np.any(np.isfinite(new) & ~np.isfinite(old)):
        return np.inf
    return float(np.max(np.abs(old[both] - new[both]), initial=0.0))


def _minimal_conflict(support: Tuple[int, ...], system: SetSystem) -> Tuple[int, ...]:
    """Shrink an infeasible support to a minimal infeasible subset."""
    current = list(support)
    for v in list(current):
        trial = [x for x in current if x != v]
        if trial and not system.is_feasible(trial):
            current = trial
    return tuple(current)


def _maximal(sets: List[Tuple[int, ...]]) -> List[Tuple[int, ...]]:
    as_sets = [frozenset(s) for s in sets]
    keep = [s for s, fs in zip(sets, as_sets) if not any(fs < other for other in as_sets)]
    return sorted(set(keep))


def verify_formulation(model: MilpModel, system: SetSystem, max_binaries: int = MAX_BINARIES) -> VerificationReport:
    blocks = model.metadata.get("blocks")
    if not blocks:
        raise SpecIncomplete(f"model '{model.name}' carries no vertex blocks to verify")
    binaries = [v.name for v in model.binaries]
    if len(binaries) > max_binaries:
        raise TooManyBinaries(f"{len(binaries)} binaries exceed the enumeration limit of {max_binaries}")
    propagator = BoundPropagator(model)
    block_vars = [[propagator.index[n] for n in blk["vars"]] for blk in blocks]
    reachable: Dict[Tuple[int, ...], Dict[str, int]] = {}
    violations: List[SupportViolation] = []
    total = 2 ** len(binaries)
    count = 0
    for values in itertools.product((0, 1), repeat=len(binaries)):
        assignment = dict(zip(binaries, values))
        bounds = propagator.propagate({k: float(v) for k, v in assignment.items()})
        if bounds is None:
            continue
        count += 1
        lb, ub = bounds
        support = set()
        for k, blk in enumerate(blocks):
            if any(max(abs(lb[i]), abs(ub[i])) > OPEN_TOL for i in block_vars[k]):
                support.update(blk["vertices"])
        key = tuple(sorted(support))
        if key in reachable:
            continue
        reachable[key] = assignment
        if not system.is_feasible(key):
            violations.append(SupportViolation(assignment, key, _minimal_conflict(key, system)))

    supports = list(reachable)
    missing = [s for s in system.sets if not any(set(s) <= set(u) for u in supports)]
    report = VerificationReport(model.metadata.get("formulation", model.name), len(binaries), total, count,
                                _maximal(supports), violations, sorted(missing))
    log.info("%r", report)
    return report
