"""Small DPLL SAT solver: two watched literals, activity-ordered branching, chronological backtracking.

Clauses use DIMACS conventions: variables are 1..n, a literal is +v or -v.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

from src.errors import IoError

log = logging.getLogger(__name__)

ACTIVITY_GROWTH = 1.05
ACTIVITY_LIMIT = 1e100


@dataclass
class Cnf:
    num_vars: int
    clauses: List[List[int]] = field(default_factory=list)

    def add(self, clause: Sequence[int]) -> None:
        self.clauses.append(list(clause))

    def to_dimacs(self, comments: Sequence[str] = ()) -> str:
        lines = [f"c {c}" for c in comments]
        lines.append(f"p cnf {self.num_vars} {len(self.clauses)}")
        lines.extend(" ".join(str(lit) for lit in clause) + " 0" for clause in self.clauses)
        return "\n".join(lines) + "\n"


def write_dimacs(cnf: Cnf, path, comments: Sequence[str] = ()) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(cnf.to_dimacs(comments))
    except OSError as e:
        raise IoError(f"cannot write CNF to {path}: {e}") from e


class DpllSolver:
    def __init__(self, cnf: Cnf):
        self.num_vars = cnf.num_vars
        self.value: List[Optional[bool]] = [None] * (self.num_vars + 1)
        self.activity = [0.0] * (self.num_vars + 1)
        self.bump = 1.0
        self.trail: List[int] = []
        self.levels: List[int] = []       # trail position where each decision level starts
        self.flipped: List[bool] = []     # second branch of that level already taken
        self.qhead = 0
        self.clauses: List[List[int]] = []
        self.watches: Dict[int, List[int]] = {}
        self.units: List[int] = []
        self.empty = False
        self.conflicts = 0
        self.decisions = 0

        for raw in cnf.clauses:
            clause = list(dict.fromkeys(raw))
            if any(-lit in clause for lit in clause):
                continue
            if not clause:
                self.empty = True
                continue
            for lit in clause:
                self.activity[abs(lit)] += 1.0
            if len(clause) == 1:
                self.units.append(clause[0])
                continue
            index = len(self.clauses)
            self.clauses.append(clause)
            self.watches.setdefault(clause[0], []).append(index)
            self.watches.setdefault(clause[1], []).append(index)

    def _lit_value(self, lit: int) -> Optional[bool]:
        v = self.value[abs(lit)]
        if v is None:
            return None
        return v if lit > 0 else not v

    def _assign(self, lit: int) -> None:
        self.value[abs(lit)] = lit > 0
        self.trail.append(lit)

    def _propagate(self) -> Optional[List[int]]:
        """Unit propagation over the trail; returns a conflicting clause or None."""
        while self.qhead < len(self.trail):
            false_lit = -self.trail[self.qhead]
            self.qhead += 1
            watching = self.watches.get(false_lit, [])
            keep = []
            i = 0
            while i < len(watching):
                ci = watching[i]
                i += 1
                clause = self.clauses[ci]
                if clause[0] == false_lit:
                    clause[0], clause[1] = clause[1], clause[0]
                if self._lit_value(clause[0]) is True:
                    keep.append(ci)
                    continue
                moved = False
                for k in range(2, len(clause)):
                    if self._lit_value(clause[k]) is not False:
                        clause[1], clause[k] = clause[k], clause[1]
                        self.watches.setdefault(clause[1], []).append(ci)
                        moved = True
                        break
                if moved:
                    continue
                keep.append(ci)
                first = self._lit_value(clause[0])
                if first is None:
                    self._assign(clause[0])
                elif first is False:
                    keep.extend(watching[i:])
                    self.watches[false_lit] = keep
                    return clause
            self.watches[false_lit] = keep
        return None

    def _bump(self, clause: Sequence[int]) -> None:
        for lit in clause:
            self.activity[abs(lit)] += self.bump
        self.bump *= ACTIVITY_GROWTH
        if self.bump > ACTIVITY_LIMIT:
            self.activity = [a / ACTIVITY_LIMIT for a in self.activity]
            self.bump /= ACTIVITY_LIMIT

    def _pick(self) -> Optional[int]:
        best, best_act = None, -1.0
        for var in range(1, self.num_vars + 1):
            if self.value[var] is None and self.activity[var] > best_act:
                best, best_act = var, self.activity[var]
        return best

    def _undo_level(self) -> int:
        """Pop the last decision level; returns its decision literal."""
        start = self.levels.pop()
        self.flipped.pop()
        decision = self.trail[start]
        for lit in self.trail[start:]:
            self.value[abs(lit)] = None
        del self.trail[start:]
        self.qhead = len(self.trail)
        return decision

    def _open_level(self, lit: int, flipped: bool) -> None:
        self.levels.append(len(self.trail))
        self.flipped.append(flipped)
        self._assign(lit)

    def solve(self) -> Optional[Dict[int, bool]]:
        """A satisfying assignment {var: bool}, or None if the formula is unsatisfiable."""
        if self.empty:
            return None
        for lit in self.units:
            current = self._lit_value(lit)
            if current is False:
                return None
            if current is None:
                self._assign(lit)
        if self._propagate() is not None:
            return None
        while True:
            var = self._pick()
            if var is None:
                log.debug("sat: %d vars, %d decisions, %d conflicts", self.num_vars, self.decisions, self.conflicts)
                return {v: bool(self.value[v]) for v in range(1, self.num_vars + 1)}
            self.decisions += 1
            self._open_level(-var, flipped=False)
            conflict = self._propagate()
            while conflict is not None:
                self.conflicts += 1
                self._bump(conflict)
                while self.flipped and self.flipped[-1]:
                    self._undo_level()
                if not self.levels:
                    return None
                decision = self._undo_level()
                self._open_level(-decision, flipped=True)
                conflict = self._propagate()


def solve_cnf(cnf: Cnf) -> Optional[Dict[int, bool]]:
    return DpllSolver(cnf).solve()
