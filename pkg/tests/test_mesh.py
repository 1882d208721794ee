import json

import numpy as np
import pytest

from src.errors import IoError, ParseError, ValidationError
from src.geometry import simplex_volume
from src.mesh import (cube_five_tetrahedra, grid_triangulation, load_mesh, mesh_edges, mesh_from_dict,
                      mesh_to_dict, save_mesh, to_set_system, validate_partition)
from src.models.partition import SetSystem, SimplicialPartition

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


class TestGridTriangulation:
    def test_sizes(self):
        grid = grid_triangulation(3, 2, seed=4)
        assert grid.num_vertices == 12
        assert grid.num_simplices == 12
        validate_partition(grid)

    def test_fixed_diagonals_are_deterministic(self):
        a = grid_triangulation(2, 2, diag_rule="fixed")
        b = grid_triangulation(2, 2, diag_rule="fixed", seed=99)
        assert a.simplices == b.simplices
        assert (0, 1, 4) in a.simplices

    def test_random_diagonals_follow_the_seed(self):
        assert grid_triangulation(4, 4, seed=1).simplices == grid_triangulation(4, 4, seed=1).simplices

    def test_values_from_function(self):
        grid = grid_triangulation(2, 2, domain=(0, 0, 2, 2), f=lambda x, y: x * y)
        assert grid.values[-1] == pytest.approx(4.0)

    def test_area_matches_domain(self):
        grid = grid_triangulation(3, 3, domain=(-1, 0, 1, 3), seed=0)
        total = sum(simplex_volume(grid.coords(s)) for s in grid.simplices)
        assert total == pytest.approx(6.0)

    @pytest.mark.parametrize("nx, ny, rule", [(0, 1, "fixed"), (2, 2, "zigzag")])
    def test_invalid_arguments(self, nx, ny, rule):
        with pytest.raises(ValidationError):
            grid_triangulation(nx, ny, diag_rule=rule)


class TestValidatePartition:
    def test_b3_example_is_valid(self, b3_partition):
        validate_partition(b3_partition)
        assert b3_partition.num_simplices == 4

    def test_cube_is_valid(self):
        cube = cube_five_tetrahedra()
        validate_partition(cube)
        total = sum(simplex_volume(cube.coords(s)) for s in cube.simplices)
        assert total == pytest.approx(1.0)

    def test_overlapping_triangles(self):
        p = SimplicialPartition(SQUARE, [0, 0, 0, 0], [(0, 1, 2), (0, 2, 3), (0, 1, 3)])
        with pytest.raises(ValidationError):
            validate_partition(p)

    def test_errors_are_aggregated(self):
        points = SQUARE + [(0.5, 0.5), (2.0, 2.0)]
        p = SimplicialPartition(points, [0, 0, 0, 0, 0, 0], [(0, 1, 2), (0, 2, 4), (0, 2, 3)])
        with pytest.raises(ValidationError) as exc:
            validate_partition(p)
        message = str(exc.value)
        assert message.startswith("Invalid simplicial partition:")
        assert "not full-dimensional" in message
        assert "[5]" in message

    def test_value_count_mismatch(self):
        p = SimplicialPartition(SQUARE, [0.0, 1.0], [(0, 1, 2)])
        with pytest.raises(ValidationError, match="4 vertices but 2 values"):
            validate_partition(p)

    def test_duplicate_coordinates(self):
        points = SQUARE + [(1.0, 1.0)]
        p = SimplicialPartition(points, [0] * 5, [(0, 1, 2), (0, 3, 4)])
        with pytest.raises(ValidationError):
            validate_partition(p)


class TestMeshJson:
    def test_save_and_load_preserve_floats(self, tmp_path):
        p = grid_triangulation(2, 2, f=lambda x, y: np.sin(x) + y / 3.0, seed=2)
        path = tmp_path / "mesh.json"
        save_mesh(p, path)
        assert load_mesh(path) == p

    def test_document_layout(self, b3_partition):
        data = mesh_to_dict(b3_partition)
        assert data["dim"] == 2
        assert data["vertices"][0] == {"x": [1.3, 1.3], "f": 2.6}
        assert data["simplices"][3] == [1, 2, 4]

    def test_missing_key(self):
        with pytest.raises(ParseError) as exc:
            mesh_from_dict({"dim": 2, "vertices": []})
        assert exc.value.field == "simplices"

    def test_bad_coordinate(self):
        data = {"dim": 2, "vertices": [{"x": [0, "a"], "f": 0}], "simplices": []}
        with pytest.raises(ParseError) as exc:
            mesh_from_dict(data)
        assert exc.value.field == "vertices[0].x"

    def test_wrong_simplex_arity(self):
        data = {"dim": 2, "vertices": [{"x": list(q), "f": 0} for q in SQUARE], "simplices": [[0, 1]]}
        with pytest.raises(ValidationError):
            mesh_from_dict(data)

    def test_invalid_json_reports_line(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text('{"dim": 2,\n "vertices": [,]}')
        with pytest.raises(ParseError) as exc:
            load_mesh(path)
        assert exc.value.line == 2

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_mesh(tmp_path / "nope.json")

    def test_validation_can_be_skipped(self, tmp_path):
        data = {"dim": 2, "vertices": [{"x": list(q), "f": 0} for q in SQUARE],
                "simplices": [[0, 1, 2], [0, 1, 3], [0, 2, 3]]}
        path = tmp_path / "overlap.json"
        path.write_text(json.dumps(data))
        assert load_mesh(path, validate=False).num_simplices == 3
        with pytest.raises(ValidationError):
            load_mesh(path)


def test_set_system_and_edges(b3_partition):
    system = to_set_system(b3_partition)
    assert system.ground_set == [0, 1, 2, 3, 4]
    assert system.is_feasible({0, 1})
    assert not system.is_feasible({0, 4})
    assert (0, 4) not in mesh_edges(b3_partition)
    assert len(mesh_edges(b3_partition)) == 8


def test_set_system_drops_duplicates():
    system = SetSystem(ground_set=[2, 1, 0], sets=[(1, 0), (0, 1), (1, 2)])
    assert system.sets == [(0, 1), (1, 2)]
    assert system.ground_set == [0, 1, 2]
