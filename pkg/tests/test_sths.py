import json
import os

import pytest

from src.errors import ConfigError, DomainMismatch, IoError, ParseError, SpecIncomplete, ValidationError
from src.lp_format import format_lp
from src.mesh import cube_five_tetrahedra, grid_triangulation, to_set_system
from src.models.partition import SimplicialPartition
from src.sths import (PlantConfig, Scenario, SthsModelSpec, build_sths, check_domain, evaluate_schedule,
                      extract_period_disjunction, load_scenario_csv)
from src.verifier import verify_formulation


@pytest.fixture
def toy_spec(toy_scenario, toy_mesh):
    return SthsModelSpec.prepare(toy_scenario, toy_mesh)


class TestPlantConfig:
    def test_toy_plant(self, toy_plant):
        assert toy_plant.box == (0.0, 0.0, 2.0, 4.0)
        assert toy_plant.balance_coefficient == 3600.0
        assert toy_plant.hpf.k == (10.0, 0.5)

    def test_mapping_round_trip(self, toy_plant):
        assert PlantConfig.from_mapping(toy_plant.to_mapping()) == toy_plant

    def test_default_plant_file(self, data_dir):
        assert PlantConfig.from_file(os.path.join(data_dir, "plant_default.cfg")) == PlantConfig()

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            PlantConfig.from_file(tmp_path / "plant.cfg")

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match="TURBINES"):
            PlantConfig.from_mapping({"R_MIN": "1", "TURBINES": "2"})

    def test_bad_number(self):
        with pytest.raises(ParseError) as exc:
            PlantConfig.from_mapping({"Q_MAX": "lots"})
        assert exc.value.field == "Q_MAX"

    def test_empty_value(self):
        with pytest.raises(ParseError) as exc:
            PlantConfig.from_mapping({"Q_MAX": ""})
        assert exc.value.field == "Q_MAX"

    def test_range_errors_are_aggregated(self):
        with pytest.raises(ConfigError) as exc:
            PlantConfig.from_mapping({"R_MIN": "5", "R_MAX": "1", "Q_PUMP": "3"})
        message = str(exc.value)
        assert "R_MIN (5.0) must be below R_MAX (1.0)" in message
        assert "Q_PUMP" in message


class TestScenario:
    def test_load_toy_scenario(self, data_dir, toy_plant):
        scenario = load_scenario_csv(os.path.join(data_dir, "scenario_toy.csv"), toy_plant)
        assert scenario.price == [50.0, 20.0, 80.0]
        assert scenario.inflow == [1.0, 1.0, 1.0]
        assert scenario.periods == 3
        assert scenario.plant is toy_plant

    def test_rows_are_sorted_by_period(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("Period, Price, Inflow\n2,3,0\n1,2,0\n")
        assert load_scenario_csv(path).price == [2.0, 3.0]

    def test_missing_column(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("period,price\n0,1\n")
        with pytest.raises(ParseError) as exc:
            load_scenario_csv(path)
        assert exc.value.field == "inflow"

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("period,price,inflow\n0,1,0\n1,high,0\n")
        with pytest.raises(ParseError) as exc:
            load_scenario_csv(path)
        assert (exc.value.line, exc.value.field) == (3, "price")

    def test_gap_in_periods(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("period,price,inflow\n0,1,0\n2,1,0\n")
        with pytest.raises(ParseError):
            load_scenario_csv(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(IoError):
            load_scenario_csv(tmp_path / "none.csv")

    def test_validation(self, toy_plant):
        with pytest.raises(ValidationError):
            Scenario(price=[1.0, 2.0], inflow=[0.0], plant=toy_plant).validate()
        with pytest.raises(ValidationError):
            Scenario(price=[], inflow=[], plant=toy_plant).validate()


class TestCheckDomain:
    def test_toy_mesh_matches_toy_plant(self, toy_mesh, toy_plant):
        check_domain(toy_mesh, toy_plant)

    def test_wrong_box(self, toy_mesh):
        with pytest.raises(DomainMismatch):
            check_domain(toy_mesh, PlantConfig())

    def test_hole_in_the_mesh(self, toy_plant):
        grid = grid_triangulation(2, 2, domain=toy_plant.box, diag_rule="fixed")
        holed = SimplicialPartition(grid.points, grid.values, grid.simplices[1:])
        with pytest.raises(DomainMismatch, match="area"):
            check_domain(holed, toy_plant)

    def test_three_dimensional_mesh(self, toy_plant):
        with pytest.raises(DomainMismatch):
            check_domain(cube_five_tetrahedra(), toy_plant)


class TestBuildSths:
    def test_toy_model_matches_golden(self, toy_spec, golden):
        assert format_lp(build_sths(toy_spec)) == golden("sths_toy.lp")

    def test_toy_cover(self, toy_spec):
        assert [(b.A, b.B) for b in toy_spec.cover] == [((1,), (2,))]
        assert not toy_spec.has_higher_rank

    def test_three_periods(self, data_dir, toy_plant, toy_mesh):
        scenario = load_scenario_csv(os.path.join(data_dir, "scenario_toy.csv"), toy_plant)
        model = build_sths(SthsModelSpec.prepare(scenario, toy_mesh))
        assert model.num_binaries == 9
        assert model.metadata["periods"] == 3
        assert model.objective == [("p_0", 50.0), ("p_1", 20.0), ("p_2", 80.0)]
        assert model.var("r_3").lb == 0.0

    def test_domain_is_checked(self, toy_mesh):
        scenario = Scenario(price=[1.0], inflow=[0.0])
        with pytest.raises(DomainMismatch):
            build_sths(SthsModelSpec.prepare(scenario, toy_mesh))

    def test_missing_colouring(self, toy_spec):
        toy_spec.has_higher_rank = True
        with pytest.raises(SpecIncomplete):
            build_sths(toy_spec)

    def test_period_disjunction_is_exact(self, toy_spec, toy_mesh):
        period = extract_period_disjunction(build_sths(toy_spec), 0)
        assert period.has_variable("y_0_1")
        assert not period.has_variable("g_0")
        assert period.constraint("hpf_conv_0").rhs == 1.0
        report = verify_formulation(period, to_set_system(toy_mesh))
        assert report.ok

    def test_colouring_on_a_partial_tiling(self, b3_partition):
        plant = PlantConfig(r_min=0.0, r_max=3.3, q_min=0.0, q_max=3.3, r_init=1.0, r_final_min=0.0)
        spec = SthsModelSpec.prepare(Scenario(price=[1.0], inflow=[0.0], plant=plant), b3_partition)
        assert spec.coloring.q == 3
        with pytest.raises(DomainMismatch):
            build_sths(spec)


class TestEvaluateSchedule:
    def test_generating_period(self, toy_scenario):
        solution = {"g_0": 1, "p_0": 12.0, "q_0": 1.0, "r_0": 2.0, "r_1": 2.0}
        result = evaluate_schedule(solution, toy_scenario)
        assert result["pwl_obj"] == 600.0
        assert result["nl_obj"] == pytest.approx(550.0)
        assert result["rel_err"] == pytest.approx(50.0 / 550.0)
        assert result["avg_abs_hpf_err"] == pytest.approx(1.0)
        assert result["generating_periods"] == 1
        assert result["max_balance_residual"] == 0.0

    def test_pumping_and_idle_periods(self, toy_plant):
        scenario = Scenario(price=[10.0, 30.0], inflow=[0.0, 0.0], plant=toy_plant)
        solution = {"u_0": 1, "p_0": -15.0, "q_0": -1.0, "r_0": 2.0, "r_1": 3602.0, "r_2": 3602.0}
        result = evaluate_schedule(solution, scenario)
        assert result["nl_obj"] == -150.0
        assert result["pwl_obj"] == -150.0
        assert result["rel_err"] == 0.0
        assert result["generating_periods"] == 0

    def test_custom_oracle(self, toy_scenario):
        solution = {"g_0": 1, "p_0": 5.0, "q_0": 1.0, "r_0": 2.0, "r_1": 2.0}
        result = evaluate_schedule(solution, toy_scenario, hpf_oracle=lambda q, r: 5.0)
        assert result["rel_err"] == 0.0

    def test_undefined_relative_error_is_null(self, toy_scenario):
        solution = {"g_0": 1, "p_0": 5.0, "q_0": 1.0, "r_0": 2.0, "r_1": 2.0}
        result = evaluate_schedule(solution, toy_scenario, hpf_oracle=lambda q, r: 0.0)
        assert result["nl_obj"] == 0.0
        assert result["rel_err"] is None
        assert json.loads(json.dumps(result, allow_nan=False))["rel_err"] is None
