import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Tuple

from src.errors import ValidationError

Term = Tuple[str, float]

SENSES = ("<=", ">=", "=")
CONTINUOUS = "continuous"
BINARY = "binary"


@dataclass
class Variable:
    name: str
    kind: str = CONTINUOUS
    lb: float = 0.0
    ub: float = math.inf

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, BINARY):
            raise ValidationError(f"unknown variable kind '{self.kind}' for {self.name}")
        if self.kind == BINARY:
            self.lb, self.ub = 0.0, 1.0
        self.lb = float(self.lb)
        self.ub = float(self.ub)
        if self.lb > self.ub:
            raise ValidationError(f"variable {self.name} has lb {self.lb} > ub {self.ub}")

    @property
    def is_binary(self) -> bool:
        return self.kind == BINARY


def _clean(terms: Iterable[Term]) -> List[Term]:
    """Merge repeated variables (first occurrence keeps its place) and drop zero coefficients."""
    merged: Dict[str, float] = {}
    for name, coef in terms:
        merged[name] = merged.get(name, 0.0) + float(coef)
    return [(name, coef) for name, coef in merged.items() if coef != 0.0]


@dataclass
class Constraint:
    name: str
    terms: List[Term]
    sense: str
    rhs: float

    def __post_init__(self):
        if self.sense not in SENSES:
            raise ValidationError(f"constraint {self.name}: unknown sense '{self.sense}'")
        self.terms = _clean(self.terms)
        self.rhs = float(self.rhs)

    def activity(self, values: Dict[str, float]) -> float:
        return sum(coef * values.get(name, 0.0) for name, coef in self.terms)

    def violation(self, values: Dict[str, float]) -> float:
        lhs = self.activity(values)
        if self.sense == "<=":
            return max(0.0, lhs - self.rhs)
        if self.sense == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)


@dataclass(eq=False)
class MilpModel:
    """Solver-agnostic MILP: variables, linear constraints and a linear objective.

    metadata carries formulation details (the formulation name, the
    vertex blocks the verifier reads) and is not part of model equality;
    neither is the order in which variables were declared.
    """
    name: str
    variables: List[Variable] = field(default_factory=list)
    constraints: List[Constraint] = field(default_factory=list)
    sense: str = "minimize"
    objective: List[Term] = field(default_factory=list)
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.sense not in ("minimize", "maximize"):
            raise ValidationError(f"unknown objective sense '{self.sense}'")
        self._index: Dict[str, int] = {}
        self._rows: Dict[str, int] = {}
        variables, self.variables = self.variables, []
        for v in variables:
            self.add_variable(v)
        constraints, self.constraints = self.constraints, []
        for c in constraints:
            self.add_constraint(c)
        self.set_objective(self.objective, self.sense)

    # -- building --------------------------------------------------------------

    def add_variable(self, var: Variable) -> Variable:
        if var.name in self._index:
            raise ValidationError(f"duplicate variable name '{var.name}'")
        self._index[var.name] = len(self.variables)
        self.variables.append(var)
        return var

    def continuous(self, name: str, lb: float = 0.0, ub: float = math.inf) -> Variable:
        return self.add_variable(Variable(name, CONTINUOUS, lb, ub))

    def binary(self, name: str) -> Variable:
        return self.add_variable(Variable(name, BINARY))

    def _check_terms(self, terms: Iterable[Term], where: str) -> None:
        for name, _ in terms:
            if name not in self._index:
                raise ValidationError(f"{where} references undeclared variable '{name}'")

    def add_constraint(self, con: Constraint) -> Constraint:
        if con.name in self._rows:
            raise ValidationError(f"duplicate constraint name '{con.name}'")
        self._check_terms(con.terms, f"constraint {con.name}")
        self._rows[con.name] = len(self.constraints)
        self.constraints.append(con)
        return con

    def constrain(self, name: str, terms: Iterable[Term], sense: str, rhs: float) -> Constraint:
        return self.add_constraint(Constraint(name, list(terms), sense, rhs))

    def set_objective(self, terms: Iterable[Term], sense: Optional[str] = None) -> None:
        if sense is not None:
            if sense not in ("minimize", "maximize"):
                raise ValidationError(f"unknown objective sense '{sense}'")
            self.sense = sense
        cleaned = _clean(terms)
        self._check_terms(cleaned, "objective")
        self.objective = cleaned

    # -- queries ---------------------------------------------------------------

    def has_variable(self, name: str) -> bool:
        return name in self._index

    def var(self, name: str) -> Variable:
        return self.variables[self._index[name]]

    def constraint(self, name: str) -> Constraint:
        return self.constraints[self._rows[name]]

    @property
    def binaries(self) -> List[Variable]:
        return [v for v in self.variables if v.is_binary]

    @property
    def num_rows(self) -> int:
        return len(self.constraints)

    @property
    def num_cols(self) -> int:
        return len(self.variables)

    @property
    def num_binaries(self) -> int:
        return sum(1 for v in self.variables if v.is_binary)

    @property
    def num_nonzeros(self) -> int:
        return sum(len(c.terms) for c in self.constraints)

    def objective_value(self, values: Dict[str, float]) -> float:
        return sum(coef * values.get(name, 0.0) for name, coef in self.objective)

    def max_violation(self, values: Dict[str, float]) -> float:
        """Largest violation over constraints and variable bounds."""
        worst = max((c.violation(values) for c in self.constraints), default=0.0)
        for v in self.variables:
            x = values.get(v.name, 0.0)
            worst = max(worst, v.lb - x, x - v.ub)
        return worst

    def copy(self) -> "MilpModel":
        return MilpModel(self.name,
                         [Variable(v.name, v.kind, v.lb, v.ub) for v in self.variables],
                         [Constraint(c.name, list(c.terms), c.sense, c.rhs) for c in self.constraints],
                         self.sense, list(self.objective), dict(self.metadata))

    def __eq__(self, other) -> bool:
        if not isinstance(other, MilpModel):
            return NotImplemented
        # LP files list binaries apart from continuous variables, so declaration order is not compared
        return (self.name == other.name
                and {v.name: v for v in self.variables} == {v.name: v for v in other.variables}
                and self.constraints == other.constraints
                and self.sense == other.sense
                and self.objective == other.objective)

    def __repr__(self):
        return (f"<MilpModel(name='{self.name}', rows={self.num_rows}, cols={self.num_cols}, "
                f"binaries={self.num_binaries}, nonzeros={self.num_nonzeros})>")


def size_report(model: MilpModel) -> dict:
    return {
        "formulation": model.metadata.get("formulation", model.name),
        "rows": model.num_rows,
        "cols": model.num_cols,
        "binaries": model.num_binaries,
        "nonzeros": model.num_nonzeros,
    }
