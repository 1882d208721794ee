"""Bivariate functions to be fitted, with the Lipschitz constants the fitting guarantee depends on.

Built-in functions are addressable by name (``get_function("f4")``); user
functions are given as expression strings in x and y and compiled with sympy.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import sympy
from sympy.parsing.sympy_parser import parse_expr, standard_transformations

from src.errors import ParseError, ValidationError

log = logging.getLogger(__name__)

Domain = Tuple[float, float, float, float]
UNIT_SQUARE: Domain = (0.0, 0.0, 1.0, 1.0)

LIPSCHITZ_SAFETY = 1.5
ESTIMATE_GRID = 101


@dataclass
class TargetFunction:
    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz: float
    domain: Domain = UNIT_SQUARE
    lipschitz_verified: bool = True
    expression: Optional[str] = None

    def __post_init__(self):
        if not self.lipschitz > 0:
            raise ValidationError(f"Lipschitz constant of '{self.name}' must be positive, got {self.lipschitz}")
        xmin, ymin, xmax, ymax = self.domain
        if not (xmin < xmax and ymin < ymax):
            raise ValidationError(f"empty domain {self.domain}")

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at the rows of points (n x 2)."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = self.evaluator(points[:, 0], points[:, 1])
        return np.broadcast_to(np.asarray(values, dtype=float), (len(points),)).copy()

    def corners(self) -> np.ndarray:
        xmin, ymin, xmax, ymax = self.domain
        return np.array([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])

    def __repr__(self):
        flag = "" if self.lipschitz_verified else ", unverified"
        return f"<TargetFunction(name='{self.name}', L={self.lipschitz:g}{flag})>"


# -- built-in test functions on the unit square ------------------------------

def _f1(x, y):
    # atan2 keeps the petal term defined at the centre
    dx, dy = x - 0.5, y - 0.5
    radius = np.sqrt(dx ** 2 + dy ** 2)
    return np.exp(-5.0 * (radius / (1.0 + 0.3 * np.sin(5.0 * np.arctan2(dy, dx)))) ** 2)


def _f2(x, y):
    return (np.sin(6 * np.pi * x + 0.5 * y) * np.exp(-10 * ((x - 0.4) ** 2 + (y - 0.3) ** 2))
            + np.cos(5 * np.pi * y + x) * np.exp(-12 * ((x - 0.7) ** 2 + (y - 0.8) ** 2))
            + 0.1 * np.sin(3 * np.pi * x * y))


def _f3(x, y):
    return np.sin(3 * np.pi * x) * np.cos((1 - np.abs(y - 0.5)) * 2 * np.pi) * (x + y)


def _f4(x, y):
    rr = x ** 2 + (y - 0.5) ** 2
    return np.sin(50 * np.sqrt(rr)) * np.exp(-10 * rr)


def _f5(x, y):
    return (np.sin(5 * np.pi * x) * np.cos(5 * np.pi * y) + 0.5 * np.sin(10 * np.pi * x * y)
            + 0.2 * np.cos(15 * (x ** 2 + y ** 2)))


# Upper bounds on the gradient norm over [0, 1]^2.
_BUILTINS: Dict[str, Tuple[Callable, float]] = {
    "f1": (_f1, 6.5),
    "f2": (_f2, 41.7),
    "f3": (_f3, 24.1),
    "f4": (_f4, 50.1),
    "f5": (_f5, 46.5),
    "ripple": (_f4, 50.1),
}


# -- hydropower function ------------------------------------------------------

@dataclass(frozen=True)
class HydroPowerFunction:
    """phi(q, r) = l_sum * q * (sum_l k[l] r^l - l_lb - r0 q^2).

    q is the turbine discharge, r the reservoir volume and phi the power.
    The default coefficients are stand-ins: head grows linearly with the
    volume and hydraulic losses grow quadratically with the discharge.
    """
    l_sum: float = 0.0085
    k: Tuple[float, ...] = (20.0, 0.5)
    l_lb: float = 0.0
    r0: float = 0.01

    def head(self, r):
        return np.polynomial.polynomial.polyval(r, self.k)

    def __call__(self, q, r):
        q = np.asarray(q, dtype=float)
        return self.l_sum * q * (self.head(r) - self.l_lb - self.r0 * q ** 2)

    def lipschitz_bound(self, q_range: Tuple[float, float], r_range: Tuple[float, float]) -> float:
        """Upper bound on |grad phi| over the box, from termwise absolute values."""
        q_abs = max(abs(q_range[0]), abs(q_range[1]))
        r_abs = max(abs(r_range[0]), abs(r_range[1]))
        head_abs = sum(abs(c) * r_abs ** i for i, c in enumerate(self.k))
        dhead_abs = sum(i * abs(c) * r_abs ** (i - 1) for i, c in enumerate(self.k) if i > 0)
        dq = abs(self.l_sum) * (head_abs + abs(self.l_lb) + 3 * abs(self.r0) * q_abs ** 2)
        dr = abs(self.l_sum) * q_abs * dhead_abs
        return math.hypot(dq, dr)


DEFAULT_HPF_BOX: Domain = (0.0, 20.0, 20.0, 100.0)


def hpf_target(hpf: Optional[HydroPowerFunction] = None, box: Domain = DEFAULT_HPF_BOX) -> TargetFunction:
    """The hydropower function over the (q, r) box as a fitting target."""
    hpf = hpf or HydroPowerFunction()
    xmin, ymin, xmax, ymax = box
    return TargetFunction(name="hpf", evaluator=hpf, domain=box,
                          lipschitz=hpf.lipschitz_bound((xmin, xmax), (ymin, ymax)))


# -- registry and expressions -------------------------------------------------

def builtin_names() -> Sequence[str]:
    return sorted(list(_BUILTINS) + ["hpf"])


def get_function(name: str) -> TargetFunction:
    if name == "hpf":
        return hpf_target()
    if name not in _BUILTINS:
        raise ValidationError(f"unknown function '{name}', choose one of {', '.join(builtin_names())}")
    evaluator, lipschitz = _BUILTINS[name]
    return TargetFunction(name=name, evaluator=evaluator, lipschitz=lipschitz)


_X, _Y = sympy.symbols("x y", real=True)
_ALLOWED = {
    "x": _X, "y": _Y,
    "sin": sympy.sin, "cos": sympy.cos, "tan": sympy.tan, "exp": sympy.exp,
    "sqrt": sympy.sqrt, "abs": sympy.Abs, "atan": sympy.atan, "atan2": sympy.atan2,
    "log": sympy.log, "pi": sympy.pi, "e": sympy.E, "E": sympy.E,
}
_ALLOWED_FUNCTIONS = {sympy.sin, sympy.cos, sympy.tan, sympy.exp, sympy.Abs, sympy.atan,
                      sympy.atan2, sympy.log}


def parse_expression(text: str) -> sympy.Expr:
    """Parse an arithmetic expression in x and y; only whitelisted names are accepted."""
    if "__" in text:
        raise ParseError(f"invalid expression '{text}'", field="expr")
    try:
        expr = parse_expr(text, local_dict=dict(_ALLOWED), transformations=standard_transformations)
    except Exception as e:
        raise ParseError(f"cannot parse expression '{text}': {e}", field="expr") from e
    if not isinstance(expr, sympy.Expr):
        raise ParseError(f"'{text}' is not an arithmetic expression", field="expr")
    unknown = expr.free_symbols - {_X, _Y}
    if unknown:
        raise ParseError(f"unknown names {sorted(str(s) for s in unknown)} in '{text}'", field="expr")
    functions = {type(f) for f in expr.atoms(sympy.Function)} - _ALLOWED_FUNCTIONS
    if functions:
        raise ParseError(f"unsupported functions {sorted(f.__name__ for f in functions)} in '{text}'",
                         field="expr")
    return expr


def from_expression(text: str, domain: Domain = UNIT_SQUARE,
                    lipschitz: Optional[float] = None) -> TargetFunction:
    """Compile an expression string; without an explicit L the constant is estimated and marked unverified."""
    expr = parse_expression(text)
    evaluator = sympy.lambdify((_X, _Y), expr, modules="numpy")
    verified = lipschitz is not None
    if lipschitz is None:
        lipschitz = estimate_lipschitz(expr, domain)
    return TargetFunction(name=text, evaluator=evaluator, lipschitz=lipschitz, domain=domain,
                          lipschitz_verified=verified, expression=text)


def estimate_lipschitz(expr, domain: Domain = UNIT_SQUARE, n: int = ESTIMATE_GRID,
                       safety: float = LIPSCHITZ_SAFETY) -> float:
    """Max gradient norm over an n x n grid times a safety factor.

    expr is a sympy expression (differentiated symbolically) or a
    TargetFunction (central differences). The result is not a proven bound.
    """
    xmin, ymin, xmax, ymax = domain
    gx, gy = np.meshgrid(np.linspace(xmin, xmax, n), np.linspace(ymin, ymax, n))
    if isinstance(expr, sympy.Expr):
        dfx = sympy.lambdify((_X, _Y), sympy.diff(expr, _X), modules="numpy")
        dfy = sympy.lambdify((_X, _Y), sympy.diff(expr, _Y), modules="numpy")
        with np.errstate(all="ignore"):
            gradx = np.broadcast_to(np.asarray(dfx(gx, gy), dtype=float), gx.shape)
            grady = np.broadcast_to(np.asarray(dfy(gx, gy), dtype=float), gx.shape)
    else:
        h = 1e-6 * max(xmax - xmin, ymax - ymin)
        pts = np.column_stack([gx.ravel(), gy.ravel()])
        ex = np.array([h, 0.0])
        ey = np.array([0.0, h])
        gradx = (expr(pts + ex) - expr(pts - ex)) / (2 * h)
        grady = (expr(pts + ey) - expr(pts - ey)) / (2 * h)
    norms = np.hypot(gradx, grady)
    norms = norms[np.isfinite(norms)]
    estimate = safety * float(norms.max()) if norms.size else 0.0
    if estimate <= 0.0:
        estimate = 1e-9
    log.warning("Lipschitz constant %.6g is an unverified grid estimate; the error guarantee depends on it",
                estimate)
    return estimate
