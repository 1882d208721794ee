import json
import os
from unittest.mock import Mock, patch

import pytest

from src.config import CliConfig
from src.errors import SizeLimit
from src.main import PwlCli, build_parser, create_cli, main
from src.run_record_dao import RunRecordDao

DATA = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
B3 = os.path.join(DATA, "b3_example.json")


@pytest.fixture
def out(tmp_path):
    return str(tmp_path / "out")


def run(out, *argv):
    return main(["--out", out, "--no-record", "--solver-cmd=", *argv])


def read_json(out, name):
    with open(os.path.join(out, name)) as fh:
        return json.load(fh)


def test_parser_requires_a_command():
    with pytest.raises(SystemExit):
        build_parser().parse_args([])


def test_create_cli_applies_flags(out):
    args = build_parser().parse_args(["--out", out, "--seed", "5", "--no-record", "analyze", B3])
    cli = create_cli(args)
    assert cli.config.out_dir == out
    assert cli.config.seed == 5
    assert cli.config.record is False


class TestCommands:
    def test_analyze(self, out):
        assert run(out, "analyze", B3) == 0
        summary = read_json(out, "analysis.json")
        assert (summary["rank"], summary["q"], summary["cover_size"]) == (3, 3, 1)

    def test_reduce(self, out):
        assert run(out, "reduce", B3) == 0
        summary = read_json(out, "reduce.json")
        assert [s["edge"] for s in summary["splits"]] == [[1, 2]]
        assert summary["rank"] == 2
        assert os.path.exists(os.path.join(out, "mesh.json"))

    def test_cover(self, out):
        assert run(out, "cover", B3) == 0
        assert read_json(out, "cover.json")["bicliques"] == [{"A": [4], "B": [0, 3]}]

    def test_formulate(self, out):
        assert run(out, "formulate", B3, "--formulation", "cc") == 0
        assert read_json(out, "cc_size.json")["binaries"] == 4
        assert os.path.exists(os.path.join(out, "cc.lp"))

    def test_verify(self, out):
        assert run(out, "verify", B3, "--formulation", "gib", "--formulation", "dlog") == 0
        reports = read_json(out, "verify.json")
        assert set(reports) == {"gib", "dlog"}
        assert all(r["sound"] and r["complete"] for r in reports.values())

    def test_pipeline(self, out):
        assert run(out, "pipeline", B3, "--svg") == 0
        for name in ("analysis.json", "cover.json", "model.lp", "mesh.json", "mesh.svg"):
            assert os.path.exists(os.path.join(out, name)), name
        assert read_json(out, "analysis.json")["splits"] == 1

    def test_pipeline_without_reduction(self, out):
        assert run(out, "pipeline", B3, "--no-reduce") == 0
        assert read_json(out, "analysis.json")["model"]["binaries"] == 4
        assert not os.path.exists(os.path.join(out, "mesh.json"))

    def test_fit_expression(self, out):
        assert run(out, "fit", "--expr", "x + y", "--lipschitz", "1.5", "--eps", "0.1") == 0
        summary = read_json(out, "fit_summary.json")
        assert summary["n_triangles"] == 2
        for name in ("mesh.json", "report.csv", "convergence.svg", "mesh.svg"):
            assert os.path.exists(os.path.join(out, name)), name

    def test_fit_iteration_cap(self, out):
        code = run(out, "fit", "--expr", "x * y", "--lipschitz", "1.5", "--eps", "0.05", "--max-iter", "1")
        assert code == 2
        assert os.path.exists(os.path.join(out, "mesh_partial.json"))

    def test_fit_sampling_budget(self, out):
        assert run(out, "fit", "--expr", "x * y", "--lipschitz", "1.5", "--eps", "0.001") == 4
        assert run(out, "--sample-budget", "10", "fit", "--expr", "x * y", "--lipschitz", "1.5",
                   "--eps", "0.1") == 4

    def test_sths_without_solver(self, out):
        scenario = os.path.join(DATA, "scenario_toy.csv")
        plant = os.path.join(DATA, "plant_toy.cfg")
        mesh = os.path.join(DATA, "sths_toy_mesh.json")
        assert run(out, "sths", scenario, plant, mesh, "--verify-periods") == 0
        summary = read_json(out, "sths_summary.json")
        assert summary["periods"] == 3
        assert summary["period_checks"] == {"0": True, "1": True, "2": True}
        assert "solve" not in summary
        assert os.path.exists(os.path.join(out, "sths.lp"))


class TestExitCodes:
    def test_missing_mesh(self, out, tmp_path):
        assert run(out, "analyze", str(tmp_path / "none.json")) == 3

    def test_invalid_config(self, out):
        assert main(["--out", out, "--no-record", "--seed", "-1", "analyze", B3]) == 3

    def test_budget(self, out):
        assert main(["--out", out, "--no-record", "--budget", "1", "analyze", B3]) == 4

    def test_no_solver(self, out):
        assert run(out, "formulate", B3) == 0
        assert run(out, "solve", os.path.join(out, "gib.lp")) == 1

    def test_mismatched_sths_mesh(self, out):
        scenario = os.path.join(DATA, "scenario_toy.csv")
        plant = os.path.join(DATA, "plant_default.cfg")
        assert run(out, "sths", scenario, plant, os.path.join(DATA, "sths_toy_mesh.json")) == 3


class TestRunRecording:
    def test_successful_run_is_recorded(self, out):
        config = CliConfig(out_dir=out)
        dao = Mock()
        cli = PwlCli(config, dao_factory=Mock(return_value=dao))
        assert cli.run(build_parser().parse_args(["analyze", B3])) == 0
        record = dao.add.call_args[0][0]
        assert record.command == "analyze"
        assert record.exit_code == 0
        assert json.loads(record.summary)["q"] == 3

    @patch("src.main.analyze", side_effect=SizeLimit("too many candidates"))
    def test_failed_run_is_recorded(self, mock_analyze, out):
        dao = Mock()
        cli = PwlCli(CliConfig(out_dir=out), dao_factory=Mock(return_value=dao))
        assert cli.run(build_parser().parse_args(["analyze", B3])) == 4
        record = dao.add.call_args[0][0]
        assert record.exit_code == 4
        assert record.summary_dict == {"error": "SizeLimit", "message": "too many candidates"}

    def test_recording_failure_only_warns(self, out, caplog):
        cli = PwlCli(CliConfig(out_dir=out), dao_factory=Mock(side_effect=RuntimeError("db locked")))
        assert cli.run(build_parser().parse_args(["analyze", B3])) == 0
        assert "could not record the run" in caplog.text

    def test_no_record_skips_the_registry(self, out):
        factory = Mock()
        cli = PwlCli(CliConfig(out_dir=out, record=False), dao_factory=factory)
        cli.run(build_parser().parse_args(["analyze", B3]))
        factory.assert_not_called()

    def test_sqlite_registry(self, out):
        assert main(["--out", out, "analyze", B3]) == 0
        latest = RunRecordDao(f"sqlite:///{os.path.join(out, 'runs.db')}").latest()
        assert latest.command == "analyze"
        assert latest.summary_dict["rank"] == 3
