import pandas as pd
import pytest

from src.fit_reporter import CSV_COLUMNS, FitReporter, write_mesh_svg
from src.fitting import FitConfig, FitReport, IterationRecord


@pytest.fixture
def report(toy_mesh):
    records = [
        IterationRecord(1, 4, 2, 0.8, (1.0, 2.0), 0, 2),
        IterationRecord(2, 5, 4, 0.3, (0.5, 1.0), 1, 2),
        IterationRecord(3, 6, 6, 0.04, None, 0, 0),
    ]
    return FitReport("toy", FitConfig(eps=0.1), records, partition=toy_mesh, error_bound=0.09)


def test_summary(report):
    summary = FitReporter(report).generate_summary()
    assert summary["function"] == "toy"
    assert summary["iterations"] == 3
    assert summary["n_points"] == 4
    assert summary["n_triangles"] == 2
    assert summary["eps_hat_max"] == 0.04
    assert summary["target"] == pytest.approx(0.05)
    assert summary["error_bound"] == 0.09
    assert summary["ruppert_insertions"] == 1


def test_summary_without_iterations():
    summary = FitReporter(FitReport("empty", FitConfig(eps=0.1))).generate_summary()
    assert summary["iterations"] == 0
    assert summary["eps_hat_max"] is None
    assert summary["error_bound"] is None


def test_csv(report, tmp_path):
    path = tmp_path / "iterations.csv"
    FitReporter(report).write_csv(path)
    frame = pd.read_csv(path)
    assert list(frame.columns) == CSV_COLUMNS
    assert frame["n_triangles"].tolist() == [2, 4, 6]
    assert frame["eps_hat_max"].iloc[-1] == 0.04


def test_svg_plots(report, tmp_path):
    reporter = FitReporter(report)
    reporter.write_convergence_svg(tmp_path / "convergence.svg")
    reporter.write_mesh_svg(tmp_path / "mesh.svg")
    for name in ("convergence.svg", "mesh.svg"):
        assert (tmp_path / name).read_text().lstrip().startswith("<?xml")


def test_mesh_svg_title(toy_mesh, tmp_path):
    write_mesh_svg(toy_mesh, tmp_path / "m.svg", title="hpf")
    assert "2 triangles" in (tmp_path / "m.svg").read_text()
