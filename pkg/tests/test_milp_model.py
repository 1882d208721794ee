import math

import pytest

from src.errors import ValidationError
from src.models.milp_model import Constraint, MilpModel, Variable, size_report


@pytest.fixture
def model():
    m = MilpModel("toy", metadata={"formulation": "toy"})
    m.continuous("x", 0.0, 2.0)
    m.binary("b")
    m.constrain("cap", [("x", 1.0), ("b", -2.0)], "<=", 0.0)
    m.set_objective([("x", -1.0)])
    return m


def test_binary_bounds_are_forced():
    v = Variable("b", "binary", lb=-5, ub=7)
    assert (v.lb, v.ub) == (0.0, 1.0)


def test_bad_bounds_and_kinds():
    with pytest.raises(ValidationError):
        Variable("x", lb=2.0, ub=1.0)
    with pytest.raises(ValidationError):
        Variable("x", kind="integer")


def test_terms_are_merged_and_zeros_dropped():
    c = Constraint("c", [("x", 1.0), ("y", 2.0), ("x", 0.5), ("y", -2.0)], "<=", 1)
    assert c.terms == [("x", 1.5)]
    assert c.rhs == 1.0


def test_unknown_sense():
    with pytest.raises(ValidationError):
        Constraint("c", [("x", 1.0)], "<>", 0)


def test_duplicates_and_undeclared_names(model):
    with pytest.raises(ValidationError):
        model.continuous("x")
    with pytest.raises(ValidationError):
        model.constrain("cap", [("x", 1.0)], "<=", 1)
    with pytest.raises(ValidationError):
        model.constrain("other", [("q", 1.0)], "<=", 1)
    with pytest.raises(ValidationError):
        model.set_objective([("q", 1.0)])


def test_violation_and_objective(model):
    assert model.max_violation({"x": 2.0, "b": 1.0}) == 0.0
    assert model.max_violation({"x": 1.0, "b": 0.0}) == pytest.approx(1.0)
    assert model.max_violation({"x": 3.0, "b": 1.0}) == pytest.approx(1.0)
    assert model.objective_value({"x": 2.0}) == -2.0


def test_equality_ignores_declaration_order_and_metadata(model):
    other = MilpModel("toy", [Variable("b", "binary"), Variable("x", ub=2.0)],
                      [Constraint("cap", [("x", 1.0), ("b", -2.0)], "<=", 0.0)],
                      objective=[("x", -1.0)])
    assert other == model
    other.constraint("cap").rhs = 1.0
    assert other != model


def test_copy_is_independent(model):
    clone = model.copy()
    clone.var("x").ub = math.inf
    assert model.var("x").ub == 2.0
    assert clone.metadata == {"formulation": "toy"}


def test_size_report(model):
    assert size_report(model) == {"formulation": "toy", "rows": 1, "cols": 2, "binaries": 1, "nonzeros": 2}
