import pytest

from src.errors import (ConfigError, Degenerate, DomainMismatch, Infeasible, IoError, MaxIterExceeded, ParseError,
                        PwlError, RefinementLimit, SizeLimit, SolverNotFound, TooManyBinaries, ValidationFailed,
                        exit_code_for)


def test_parse_error_location():
    err = ParseError("bad number", line=4, field="f")
    assert (err.line, err.field) == (4, "f")
    assert str(err) == "bad number (line 4, field 'f')"
    assert str(ParseError("empty")) == "empty"


def test_io_error_is_an_os_error():
    assert isinstance(IoError("x"), OSError)
    assert isinstance(IoError("x"), PwlError)


def test_max_iter_carries_partial_result():
    assert MaxIterExceeded("cap", partial=("f", "r")).partial == ("f", "r")


@pytest.mark.parametrize("error, code", [
    (MaxIterExceeded("x"), 2),
    (RefinementLimit("x"), 2),
    (ParseError("x"), 3),
    (ConfigError("x"), 3),
    (DomainMismatch("x"), 3),
    (Degenerate("x"), 3),
    (IoError("x"), 3),
    (SizeLimit("x"), 4),
    (TooManyBinaries("x"), 4),
    (Infeasible("x"), 1),
    (SolverNotFound("x"), 1),
    (ValidationFailed("x"), 1),
    (RuntimeError("x"), 1),
])
def test_exit_codes(error, code):
    assert exit_code_for(error) == code
