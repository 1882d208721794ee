"""Run an external MILP solver on an LP file and bring the solution back.

The solver command is a template such as::

    cbc {lp} sec {tl} solve solu {sol}

Two solution layouts are understood. The plain one::

    status optimal
    objective 3
    x 3

and the CBC one, whose first line reads "Optimal - objective value 3"
followed by "index name value reduced-cost" rows. Returned values are
re-checked against the model before they are accepted.
"""

import logging
import os
import shlex
import shutil
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from src.config import Config
from src.errors import IoError, ParseError, SolverNotFound, ValidationFailed
from src.lp_format import write_lp
from src.models.milp_model import MilpModel

log = logging.getLogger(__name__)

FEAS_TOL = 1e-6
INTEGRALITY_TOL = 1e-6
TIMEOUT_GRACE = 30.0
STATUSES = ("optimal", "feasible", "infeasible", "timeout", "error")

_CBC_STATUS = {
    "optimal": "optimal",
    "infeasible": "infeasible",
    "integer infeasible": "infeasible",
    "unbounded": "error",
    "stopped on time": "timeout",
    "stopped on iterations": "feasible",
    "stopped on difficulties": "error",
}


@dataclass
class SolveResult:
    status: str
    objective: Optional[float] = None
    values: Dict[str, float] = field(default_factory=dict)
    log_path: Optional[str] = None
    wall_time: float = 0.0

    @property
    def has_solution(self) -> bool:
        return self.status in ("optimal", "feasible")

    def to_dict(self) -> dict:
        return {"status": self.status, "objective": self.objective, "values": self.values,
                "log_path": self.log_path, "wall_time": self.wall_time}


def _cbc_status(header: str) -> str:
    text = header.lower()
    for prefix, status in _CBC_STATUS.items():
        if text.startswith(prefix):
            if status == "timeout" and "objective value" in text:
                return "feasible"
            return status
    return "error"


def parse_solution(text: str) -> Tuple[str, Optional[float], Dict[str, float]]:
    """(status, objective, values) from either supported layout."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ParseError("empty solution file")
    values: Dict[str, float] = {}
    objective = None
    first = lines[0].split()
    if first[0].lower() == "status":
        if len(first) < 2 or first[1].lower() not in STATUSES:
            raise ParseError(f"unknown status line '{lines[0]}'", line=1)
        status = first[1].lower()
        for lineno, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if len(parts) != 2:
                raise ParseError(f"expected 'name value', got '{line}'", line=lineno)
            try:
                number = float(parts[1])
            except ValueError:
                raise ParseError(f"bad number '{parts[1]}'", line=lineno) from None
            if parts[0].lower() == "objective":
                objective = number
            else:
                values[parts[0]] = number
        return status, objective, values

    status = _cbc_status(lines[0])
    if "objective value" in lines[0].lower():
        try:
            objective = float(lines[0].lower().split("objective value")[1].split()[0])
        except (IndexError, ValueError):
            raise ParseError(f"cannot read the objective from '{lines[0]}'", line=1) from None
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.replace("**", " ").split()
        if len(parts) < 3:
            raise ParseError(f"expected 'index name value ...', got '{line}'", line=lineno)
        try:
            values[parts[1]] = float(parts[2])
        except ValueError:
            raise ParseError(f"bad number '{parts[2]}'", line=lineno) from None
    return status, objective, values


def read_solution(path) -> Tuple[str, Optional[float], Dict[str, float]]:
    try:
        with open(path) as fh:
            return parse_solution(fh.read())
    except OSError as e:
        raise IoError(f"cannot read solution file {path}: {e}") from e


def validate_solution(model: MilpModel, values: Dict[str, float]) -> Dict[str, float]:
    """Complete, round and re-check a solver's values; raises ValidationFailed on any violation."""
    unknown = sorted(set(values) - {v.name for v in model.variables})
    if unknown:
        raise ValidationFailed(f"solution names unknown variables: {unknown[:5]}")
    checked = {v.name: float(values.get(v.name, 0.0)) for v in model.variables}
    for v in model.binaries:
        x = checked[v.name]
        if min(abs(x), abs(x - 1.0)) > INTEGRALITY_TOL:
            raise ValidationFailed(f"binary {v.name} = {x} is not integral")
        checked[v.name] = float(round(x))
    worst = model.max_violation(checked)
    if worst > FEAS_TOL:
        raise ValidationFailed(f"solution violates the model by {worst:g}")
    return checked


def solve_external(model: MilpModel, solver_cmd: Optional[str] = None, time_limit_s: Optional[float] = None,
                   workdir: Optional[str] = None) -> SolveResult:
    template = solver_cmd if solver_cmd is not None else Config.SOLVER_CMD
    if not template or not template.strip():
        raise SolverNotFound("no solver configured; set PWL_SOLVER_CMD")
    time_limit = Config.TIME_LIMIT if time_limit_s is None else time_limit_s
    workdir = workdir or tempfile.mkdtemp(prefix="pwl-solve-")
    os.makedirs(workdir, exist_ok=True)
    lp_path = os.path.join(workdir, f"{model.name}.lp")
    sol_path = os.path.join(workdir, f"{model.name}.sol")
    log_path = os.path.join(workdir, f"{model.name}.log")
    if os.path.exists(sol_path):
        os.remove(sol_path)
    write_lp(model, lp_path)

    args = shlex.split(template.format(lp=lp_path, sol=sol_path, tl=time_limit))
    if not args or shutil.which(args[0]) is None:
        raise SolverNotFound(f"solver executable not found: {args[0] if args else template!r}")

    log.info("running solver: %s", " ".join(args))
    start = time.monotonic()
    try:
        with open(log_path, "w") as log_fh:
            completed = subprocess.run(args, stdout=log_fh, stderr=subprocess.STDOUT,
                                       timeout=time_limit + TIMEOUT_GRACE, check=False)
    except subprocess.TimeoutExpired:
        return SolveResult("timeout", log_path=log_path, wall_time=time.monotonic() - start)
    wall = time.monotonic() - start

    if not os.path.exists(sol_path):
        log.error("solver exited with code %d and wrote no solution (log: %s)", completed.returncode, log_path)
        return SolveResult("error", log_path=log_path, wall_time=wall)
    status, _, values = read_solution(sol_path)
    if status not in ("optimal", "feasible"):
        return SolveResult(status, log_path=log_path, wall_time=wall)
    checked = validate_solution(model, values)
    result = SolveResult(status, model.objective_value(checked), checked, log_path, wall)
    log.info("solver finished: %s, objective %g in %.2f s", status, result.objective, wall)
    return result
