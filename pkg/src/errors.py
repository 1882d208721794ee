"""Exception hierarchy shared by every stage of the pipeline."""

from typing import Optional


class PwlError(Exception):
    """Base class for all errors raised by this package."""


# Input errors (CLI exit code 3)

class ParseError(PwlError, ValueError):
    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ValidationError(PwlError, ValueError):
    pass


class ConfigError(PwlError, ValueError):
    pass


class DomainMismatch(PwlError, ValueError):
    pass


class SpecIncomplete(PwlError, ValueError):
    pass


class DegenerateInput(PwlError, ValueError):
    pass


class DuplicatePoint(PwlError, ValueError):
    pass


class Degenerate(PwlError, ValueError):
    pass


class NotAnEdge(PwlError, ValueError):
    pass


class OrderingUnavailable(PwlError, ValueError):
    pass


# Algorithmic non-termination (exit code 2)

class MaxIterExceeded(PwlError):
    def __init__(self, message: str, partial=None):
        super().__init__(message)
        # (PwlFunction, FitReport) reached when the cap was hit
        self.partial = partial


class RefinementLimit(PwlError):
    pass


# Budgets (exit code 4)

class SizeLimit(PwlError):
    pass


class TooManyBinaries(PwlError):
    pass


# Solving

class Infeasible(PwlError):
    pass


class NoCandidate(PwlError):
    pass


class SolverNotFound(PwlError):
    pass


class ValidationFailed(PwlError):
    pass


class IoError(PwlError, OSError):
    pass


INPUT_ERRORS = (
    ParseError, ValidationError, ConfigError, DomainMismatch, SpecIncomplete,
    DegenerateInput, DuplicatePoint, Degenerate, NotAnEdge, OrderingUnavailable, IoError,
)
NON_TERMINATION_ERRORS = (MaxIterExceeded, RefinementLimit)
BUDGET_ERRORS = (SizeLimit, TooManyBinaries)


def exit_code_for(error: BaseException) -> int:
    """Map an exception to the CLI exit code contract."""
    if isinstance(error, NON_TERMINATION_ERRORS):
        return 2
    if isinstance(error, INPUT_ERRORS):
        return 3
    if isinstance(error, BUDGET_ERRORS):
        return 4
    return 1
