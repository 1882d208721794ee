import json
import os

import pytest

from src.errors import IoError
from src.mesh import load_mesh, to_set_system
from src.pipeline import analyze, run_pipeline, write_artifacts, write_json
from src.verifier import verify_formulation


class TestRunPipeline:
    def test_analysis_without_reduction(self, b3_result):
        summary = b3_result.analysis
        assert summary["rank"] == 3
        assert (summary["nu"], summary["mu"]) == (2, 1)
        assert summary["conflicts_by_size"] == {"2": 2, "3": 1}
        assert (summary["beta"], summary["q"]) == (5, 3)
        assert summary["cover_size"] == 1
        assert summary["conflict_graph_edges"] == 2
        assert summary["splits"] == 0
        assert summary["model"]["binaries"] == 4
        assert summary["model"]["formulation"] == "gib"

    def test_reduction_removes_the_colouring(self, b3_partition):
        result = run_pipeline(b3_partition)
        summary = result.analysis
        assert summary["rank"] <= 2
        assert summary["splits"] == 1
        assert (summary["beta"], summary["q"]) == (0, 0)
        assert result.partition.num_vertices == 6
        assert verify_formulation(result.model, to_set_system(result.partition)).ok

    @pytest.mark.parametrize("formulation", ["cc", "dcc", "dlog", "mc", "inc"])
    def test_baseline_formulations(self, b3_partition, formulation):
        result = run_pipeline(b3_partition, formulation=formulation)
        assert result.model.metadata["formulation"] == formulation

    def test_analyze_only_colours_higher_rank(self, make_mesh):
        result = analyze(make_mesh(2))
        if result.hypergraph.rank <= 2:
            assert result.coloring is None and result.blocking is None
        else:
            assert result.coloring.q >= 2


class TestArtifacts:
    def test_files_without_splits(self, b3_result, tmp_path):
        paths = write_artifacts(b3_result, tmp_path / "run")
        assert sorted(paths) == ["analysis", "cover", "model"]
        analysis = json.loads(open(paths["analysis"]).read())
        assert analysis["q"] == 3
        cover = json.loads(open(paths["cover"]).read())
        assert cover["bicliques"] == [{"A": [4], "B": [0, 3]}]
        assert open(paths["model"]).read().startswith("\\* gib *\\")

    def test_split_mesh_is_written(self, b3_partition, tmp_path):
        result = run_pipeline(b3_partition)
        paths = write_artifacts(result, tmp_path)
        assert load_mesh(paths["mesh"]).num_vertices == 6

    def test_write_json_failure(self, tmp_path):
        with pytest.raises(IoError):
            write_json({}, os.path.join(str(tmp_path), "missing", "x.json"))
