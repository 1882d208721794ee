"""CPLEX LP text format for MilpModel.

Layout written by format_lp::

    \\* name *\\
    Minimize
     obj: 2 x - y
    Subject To
     c1: x + 3 y >= 1
    Bounds
     0 <= x <= 4
     y free
    Binaries
     z
    End

Numbers use 17 significant digits so parse_lp(format_lp(m)) == m. A model
without objective terms gets the placeholder "obj: 0 <first variable>".
Bounds are listed for every continuous variable in declaration order;
binaries only appear in the Binaries section.
"""

import logging
import math
from typing import Dict, List, Tuple

from src.errors import IoError, ParseError
from src.models.milp_model import BINARY, CONTINUOUS, Constraint, MilpModel, Term, Variable

log = logging.getLogger(__name__)

_SENSE_TOKENS = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "="}
_SECTIONS = {
    "minimize": "objective", "minimum": "objective", "min": "objective",
    "maximize": "objective", "maximum": "objective", "max": "objective",
    "subject to": "constraints", "such that": "constraints", "st": "constraints", "s.t.": "constraints",
    "bounds": "bounds", "bound": "bounds",
    "binaries": "binaries", "binary": "binaries", "bin": "binaries",
    "end": "end",
}


def format_number(x: float) -> str:
    if x == 0:
        return "0"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


def format_terms(terms: List[Term]) -> str:
    parts = []
    for i, (name, coef) in enumerate(terms):
        magnitude = abs(coef)
        body = name if magnitude == 1 else f"{format_number(magnitude)} {name}"
        if i == 0:
            parts.append(body if coef > 0 else f"- {body}")
        else:
            parts.append(f"{'+' if coef > 0 else '-'} {body}")
    return " ".join(parts)


def _format_bound(v: Variable) -> str:
    lb, ub = v.lb, v.ub
    if lb == ub:
        return f"{v.name} = {format_number(lb)}"
    if math.isinf(lb) and math.isinf(ub):
        return f"{v.name} free"
    if math.isinf(ub):
        return f"{v.name} >= {format_number(lb)}"
    return f"{format_number(lb)} <= {v.name} <= {format_number(ub)}"


def format_lp(model: MilpModel) -> str:
    lines = [f"\\* {model.name} *\\", "Maximize" if model.sense == "maximize" else "Minimize"]
    if model.objective:
        lines.append(f" obj: {format_terms(model.objective)}")
    elif model.variables:
        lines.append(f" obj: 0 {model.variables[0].name}")
    else:
        lines.append(" obj:")
    lines.append("Subject To")
    for c in model.constraints:
        lhs = format_terms(c.terms) if c.terms else f"0 {model.variables[0].name}"
        lines.append(f" {c.name}: {lhs} {c.sense} {format_number(c.rhs)}")
    continuous = [v for v in model.variables if v.kind == CONTINUOUS]
    if continuous:
        lines.append("Bounds")
        lines.extend(f" {_format_bound(v)}" for v in continuous)
    binaries = [v for v in model.variables if v.kind == BINARY]
    if binaries:
        lines.append("Binaries")
        lines.extend(f" {v.name}" for v in binaries)
    lines.append("End")
    return "\n".join(lines) + "\n"


def write_lp(model: MilpModel, path) -> None:
    try:
        with open(path, "w") as fh:
            fh.write(format_lp(model))
    except OSError as e:
        raise IoError(f"cannot write LP file {path}: {e}") from e
    log.debug("wrote %r to %s", model, path)


# -- reading --------------------------------------------------------------------

def _number(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"expected a number, got '{token}'", line=line) from None


def _is_number(token: str) -> bool:
    try:
        float(token)
        return True
    except ValueError:
        return False


def _parse_terms(tokens: List[str], line: int) -> List[Term]:
    terms: List[Term] = []
    sign, coef = 1.0, None
    for tok in tokens:
        if tok in ("+", "-"):
            if coef is not None:
                raise ParseError(f"dangling coefficient before '{tok}'", line=line)
            sign = sign * (-1.0 if tok == "-" else 1.0)
        elif _is_number(tok) and tok.lower() not in ("inf", "infinity", "nan"):
            if coef is not None:
                raise ParseError(f"two coefficients in a row ('{tok}')", line=line)
            coef = float(tok)
        else:
            terms.append((tok, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
    if coef is not None:
        if coef != 0:
            raise ParseError("constant term in a linear expression", line=line)
    return terms


def _split_label(text: str, line: int) -> Tuple[str, str]:
    if ":" not in text:
        raise ParseError("expected 'name: expression'", line=line)
    name, rest = text.split(":", 1)
    name = name.strip()
    if not name or " " in name:
        raise ParseError(f"bad row name '{name}'", line=line)
    return name, rest


def _parse_bound(text: str, line: int, bounds: Dict[str, Tuple[float, float]], order: List[str]) -> None:
    tokens = text.split()
    low = lambda t: t.lower()
    name, lb, ub = None, None, None
    if len(tokens) == 2 and low(tokens[1]) == "free":
        name, lb, ub = tokens[0], -math.inf, math.inf
    elif len(tokens) == 3 and tokens[1] in _SENSE_TOKENS:
        sense = _SENSE_TOKENS[tokens[1]]
        if _is_number(tokens[0]):
            value, name = _number(tokens[0], line), tokens[2]
            sense = {"<=": ">=", ">=": "<=", "=": "="}[sense]
        else:
            name, value = tokens[0], _number(tokens[2], line)
        lb, ub = bounds.get(name, (0.0, math.inf))
        if sense == "=":
            lb = ub = value
        elif sense == "<=":
            ub = value
        else:
            lb = value
    elif len(tokens) == 5 and tokens[1] in _SENSE_TOKENS and tokens[3] in _SENSE_TOKENS:
        name, lb, ub = tokens[2], _number(tokens[0], line), _number(tokens[4], line)
    else:
        raise ParseError(f"cannot parse bound '{text.strip()}'", line=line)
    if name not in bounds:
        order.append(name)
    bounds[name] = (lb, ub)


def parse_lp(text: str) -> MilpModel:
    name = "model"
    section = None
    sense = "minimize"
    objective: List[Term] = []
    constraints: List[Constraint] = []
    bounds: Dict[str, Tuple[float, float]] = {}
    bound_order: List[str] = []
    binaries: List[str] = []
    appearance: List[str] = []
    seen = set()

    def note(var_name: str) -> None:
        if var_name not in seen:
            seen.add(var_name)
            appearance.append(var_name)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("\\*"):
            if section is None and stripped.endswith("*\\"):
                name = stripped[2:-2].strip() or name
            continue
        if stripped.startswith("\\"):
            continue
        key = stripped.lower()
        if key in _SECTIONS:
            section = _SECTIONS[key]
            if section == "objective":
                sense = "maximize" if key.startswith("max") else "minimize"
            continue
        if section == "objective":
            _, rest = _split_label(stripped, lineno)
            terms = [(n, c) for n, c in _parse_terms(rest.split(), lineno) if c != 0]
            for n, _ in terms:
                note(n)
            objective.extend(terms)
        elif section == "constraints":
            row, rest = _split_label(stripped, lineno)
            tokens = rest.split()
            idx = next((i for i, t in enumerate(tokens) if t in _SENSE_TOKENS), None)
            if idx is None or idx != len(tokens) - 2:
                raise ParseError(f"constraint {row}: expected 'expression sense rhs'", line=lineno)
            terms = _parse_terms(tokens[:idx], lineno)
            for n, _ in terms:
                note(n)
            constraints.append(Constraint(row, terms, _SENSE_TOKENS[tokens[idx]], _number(tokens[-1], lineno)))
        elif section == "bounds":
            _parse_bound(stripped, lineno, bounds, bound_order)
        elif section == "binaries":
            binaries.extend(stripped.split())
        elif section == "end":
            raise ParseError("text after End", line=lineno)
        else:
            raise ParseError("expected a section header (Minimize/Maximize)", line=lineno)

    binary_set = set(binaries)
    order = [n for n in bound_order if n not in binary_set]
    order += [n for n in appearance if n not in binary_set and n not in bounds]
    variables = [Variable(n, CONTINUOUS, *bounds.get(n, (0.0, math.inf))) for n in order]
    variables += [Variable(n, BINARY) for n in binaries]
    return MilpModel(name, variables, constraints, sense, objective)


def read_lp(path) -> MilpModel:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as e:
        raise IoError(f"cannot read LP file {path}: {e}") from e
    return parse_lp(text)
