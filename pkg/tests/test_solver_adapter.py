import os
from unittest.mock import patch

import pytest

from src.errors import IoError, ParseError, SolverNotFound, ValidationFailed
from src.models.milp_model import MilpModel
from src.solver_adapter import parse_solution, read_solution, solve_external, validate_solution


@pytest.fixture
def tiny_model():
    """max x + y subject to x + y <= 1.5, x binary, 0 <= y <= 1."""
    model = MilpModel("tiny")
    model.binary("x")
    model.continuous("y", 0.0, 1.0)
    model.constrain("cap", [("x", 1.0), ("y", 1.0)], "<=", 1.5)
    model.set_objective([("x", 1.0), ("y", 1.0)], "maximize")
    return model


def fake_solver(solution_text, returncode=0):
    """subprocess.run stand-in that writes solution_text to the {sol} argument (the last one)."""
    def _run(args, **kwargs):
        if solution_text is not None:
            with open(args[-1], "w") as fh:
                fh.write(solution_text)
        return type("Completed", (), {"returncode": returncode})()
    return _run


class TestParseSolution:
    def test_plain_layout(self):
        status, objective, values = parse_solution("status optimal\nobjective 1.5\nx 1\ny 0.5\n")
        assert status == "optimal"
        assert objective == 1.5
        assert values == {"x": 1.0, "y": 0.5}

    def test_cbc_layout(self):
        text = ("Optimal - objective value 1.50000000\n"
                "      0 x                      1                       0\n"
                "      1 y                    0.5                       0\n")
        assert parse_solution(text) == ("optimal", 1.5, {"x": 1.0, "y": 0.5})

    @pytest.mark.parametrize("header, status", [
        ("Infeasible - objective value 0.00000000", "infeasible"),
        ("Integer infeasible - objective value 0.00000000", "infeasible"),
        ("Stopped on time - objective value 3.0", "feasible"),
        ("Stopped on time", "timeout"),
        ("Unbounded", "error"),
    ])
    def test_cbc_statuses(self, header, status):
        assert parse_solution(header + "\n")[0] == status

    def test_infeasibility_marker_is_ignored(self):
        text = "Stopped on time - objective value 2\n**    0 x   1   0\n"
        assert parse_solution(text)[2] == {"x": 1.0}

    def test_unknown_status(self):
        with pytest.raises(ParseError) as exc:
            parse_solution("status happy\n")
        assert exc.value.line == 1

    def test_bad_value_line(self):
        with pytest.raises(ParseError) as exc:
            parse_solution("status optimal\nx one\n")
        assert exc.value.line == 2

    def test_empty(self):
        with pytest.raises(ParseError):
            parse_solution("\n\n")

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            read_solution(tmp_path / "x.sol")


class TestValidateSolution:
    def test_rounds_binaries_and_fills_missing(self, tiny_model):
        checked = validate_solution(tiny_model, {"x": 0.9999999})
        assert checked == {"x": 1.0, "y": 0.0}

    def test_fractional_binary(self, tiny_model):
        with pytest.raises(ValidationFailed, match="not integral"):
            validate_solution(tiny_model, {"x": 0.5})

    def test_violated_row(self, tiny_model):
        with pytest.raises(ValidationFailed, match="violates"):
            validate_solution(tiny_model, {"x": 1.0, "y": 1.0})

    def test_unknown_variable(self, tiny_model):
        with pytest.raises(ValidationFailed, match="unknown"):
            validate_solution(tiny_model, {"w": 1.0})


class TestSolveExternal:
    def test_no_solver_configured(self, tiny_model):
        with pytest.raises(SolverNotFound):
            solve_external(tiny_model, solver_cmd="")

    def test_executable_missing(self, tiny_model, tmp_path):
        with patch("src.solver_adapter.shutil.which", return_value=None):
            with pytest.raises(SolverNotFound, match="nosuchsolver"):
                solve_external(tiny_model, solver_cmd="nosuchsolver {lp} {sol}", workdir=str(tmp_path))

    def test_successful_solve(self, tiny_model, tmp_path):
        run = fake_solver("status optimal\nobjective 99\nx 1\ny 0.5\n")
        with patch("src.solver_adapter.shutil.which", return_value="/usr/bin/fake"), \
                patch("src.solver_adapter.subprocess.run", side_effect=run) as mock_run:
            result = solve_external(tiny_model, solver_cmd="fake {lp} {tl} {sol}", time_limit_s=5,
                                    workdir=str(tmp_path))
        assert result.status == "optimal"
        assert result.has_solution
        # recomputed from the values, not taken from the file
        assert result.objective == 1.5
        assert result.values == {"x": 1.0, "y": 0.5}
        args = mock_run.call_args[0][0]
        assert args[1] == os.path.join(str(tmp_path), "tiny.lp")
        assert args[2] == "5"
        assert os.path.exists(args[1])

    def test_infeasible_status_has_no_values(self, tiny_model, tmp_path):
        with patch("src.solver_adapter.shutil.which", return_value="/usr/bin/fake"), \
                patch("src.solver_adapter.subprocess.run", side_effect=fake_solver("status infeasible\n")):
            result = solve_external(tiny_model, solver_cmd="fake {lp} {sol}", workdir=str(tmp_path))
        assert result.status == "infeasible"
        assert result.values == {}
        assert not result.has_solution

    def test_no_solution_file_is_an_error(self, tiny_model, tmp_path):
        with patch("src.solver_adapter.shutil.which", return_value="/usr/bin/fake"), \
                patch("src.solver_adapter.subprocess.run", side_effect=fake_solver(None, returncode=1)):
            result = solve_external(tiny_model, solver_cmd="fake {lp} {sol}", workdir=str(tmp_path))
        assert result.status == "error"
        assert result.log_path.endswith("tiny.log")

    def test_bad_solution_is_rejected(self, tiny_model, tmp_path):
        run = fake_solver("status optimal\nx 1\ny 1\n")
        with patch("src.solver_adapter.shutil.which", return_value="/usr/bin/fake"), \
                patch("src.solver_adapter.subprocess.run", side_effect=run):
            with pytest.raises(ValidationFailed):
                solve_external(tiny_model, solver_cmd="fake {lp} {sol}", workdir=str(tmp_path))


@pytest.mark.solver
def test_real_solver_on_tiny_model(tiny_model, tmp_path):
    result = solve_external(tiny_model, solver_cmd=os.environ["PWL_SOLVER_CMD"], time_limit_s=30,
                            workdir=str(tmp_path))
    assert result.status == "optimal"
    assert result.objective == pytest.approx(1.5)
