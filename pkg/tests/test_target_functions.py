import numpy as np
import pytest
import sympy

from src.errors import ParseError, ValidationError
from src.target_functions import (HydroPowerFunction, TargetFunction, builtin_names, estimate_lipschitz,
                                  from_expression, get_function, hpf_target, parse_expression)


class TestRegistry:
    def test_builtin_names(self):
        names = builtin_names()
        for name in ("f1", "f2", "f3", "f4", "f5", "hpf"):
            assert name in names

    def test_unknown_function(self):
        with pytest.raises(ValidationError, match="unknown function 'f9'"):
            get_function("f9")

    def test_f1_is_defined_at_the_centre(self):
        assert get_function("f1")(np.array([[0.5, 0.5]]))[0] == pytest.approx(1.0)

    def test_evaluation_shape(self):
        f = get_function("f4")
        assert f(np.zeros((5, 2))).shape == (5,)
        assert f(np.array([0.2, 0.3])).shape == (1,)


class TestExpressions:
    def test_linear_expression(self):
        f = from_expression("x + 2*y", lipschitz=3.0)
        assert f.lipschitz_verified
        assert f(np.array([[1.0, 1.0]]))[0] == pytest.approx(3.0)

    def test_estimated_constant_is_unverified(self):
        f = from_expression("x + y")
        assert not f.lipschitz_verified
        assert f.lipschitz == pytest.approx(1.5 * np.sqrt(2))

    def test_constant_expression_broadcasts(self):
        f = from_expression("3", lipschitz=1.0)
        assert f(np.zeros((4, 2))).tolist() == [3.0] * 4

    @pytest.mark.parametrize("text", ["x +", "z * x", "__import__('os')", "gamma(x)", "x = 1"])
    def test_rejected_expressions(self, text):
        with pytest.raises(ParseError):
            parse_expression(text)

    def test_parse_error_names_the_field(self):
        with pytest.raises(ParseError) as exc:
            parse_expression("q + 1")
        assert exc.value.field == "expr"

    def test_whitelisted_functions(self):
        expr = parse_expression("sin(pi*x) * exp(-y) + abs(x - y)")
        assert isinstance(expr, sympy.Expr)


class TestHydroPower:
    def test_value(self):
        hpf = HydroPowerFunction(l_sum=1.0, k=(10.0, 0.5), l_lb=0.0, r0=0.0)
        assert hpf(2.0, 4.0) == pytest.approx(2.0 * 12.0)

    def test_target_bound_dominates_gradient(self):
        target = hpf_target()
        assert estimate_lipschitz(target, domain=target.domain, n=41, safety=1.0) <= target.lipschitz
        assert target.name == "hpf"


def test_target_function_rejects_empty_domain():
    with pytest.raises(ValidationError):
        TargetFunction(name="g", evaluator=lambda x, y: x, lipschitz=1.0, domain=(0, 0, 0, 1))
