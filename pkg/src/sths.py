"""Short-term hydro scheduling MILP over a PWL hydropower function.

Per period t the turbine is on (g_t), the pump is on (u_t), or neither.
The (q_t, r_t) operating point of the turbine lies in the mesh and its
power is the interpolated hydropower function; the disjunction over the
mesh simplices uses the same biclique and colouring blocks as the GIB
formulation, scaled by g_t. The water balance, mode exclusion, final
volume and the price objective complete the model.

Plant files are key=value files::

    R_MIN=20
    R_MAX=100
    Q_MIN=0
    Q_MAX=20
    Q_PUMP=-10
    P_PUMP=-12
    R_INIT=60
    R_FINAL_MIN=50
    SECONDS_PER_PERIOD=3600
    VOLUME_SCALE=10000
    HPF_L_SUM=0.0085
    HPF_K=20,0.5
    HPF_L_LB=0
    HPF_R0=0.01

Scenario files are CSV with the columns period, price and inflow.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import dotenv_values

from src.biclique import conflict_graph, cover_bicliques
from src.blocking import build_blocking_hypergraph, color_blocking
from src.conflict import conflict_hypergraph
from src.errors import ConfigError, DomainMismatch, IoError, ParseError, SpecIncomplete, ValidationError
from src.geometry import simplex_volume
from src.mesh import to_set_system
from src.milp import pattern_groups
from src.models.biclique import BicliqueCover
from src.models.coloring import Coloring
from src.models.milp_model import MilpModel
from src.models.partition import SimplicialPartition
from src.target_functions import HydroPowerFunction  # noqa: F401  (re-exported)

log = logging.getLogger(__name__)

DOMAIN_TOL = 1e-9
SCENARIO_COLUMNS = ("period", "price", "inflow")

_PLANT_KEYS = {
    "R_MIN": "r_min", "R_MAX": "r_max", "Q_MIN": "q_min", "Q_MAX": "q_max",
    "Q_PUMP": "q_pump", "P_PUMP": "p_pump", "R_INIT": "r_init", "R_FINAL_MIN": "r_final_min",
    "SECONDS_PER_PERIOD": "seconds_per_period", "VOLUME_SCALE": "volume_scale",
}
_HPF_KEYS = {"HPF_L_SUM": "l_sum", "HPF_K": "k", "HPF_L_LB": "l_lb", "HPF_R0": "r0"}


@dataclass
class PlantConfig:
    """Reservoir and unit data. Volumes are in units of volume_scale m^3, flows in m^3/s, power in MW."""
    r_min: float = 20.0
    r_max: float = 100.0
    q_min: float = 0.0
    q_max: float = 20.0
    q_pump: float = -10.0
    p_pump: float = -12.0
    r_init: float = 60.0
    r_final_min: float = 50.0
    seconds_per_period: float = 3600.0
    volume_scale: float = 1e4
    hpf: HydroPowerFunction = field(default_factory=HydroPowerFunction)

    @property
    def box(self):
        """(q_min, r_min, q_max, r_max), the domain of the hydropower function."""
        return (self.q_min, self.r_min, self.q_max, self.r_max)

    @property
    def balance_coefficient(self) -> float:
        return self.seconds_per_period / self.volume_scale

    def validate(self) -> None:
        errors = []
        if not self.r_min < self.r_max:
            errors.append(f"R_MIN ({self.r_min}) must be below R_MAX ({self.r_max})")
        if not self.q_min < self.q_max:
            errors.append(f"Q_MIN ({self.q_min}) must be below Q_MAX ({self.q_max})")
        if not self.r_min <= self.r_init <= self.r_max:
            errors.append(f"R_INIT ({self.r_init}) must lie in [R_MIN, R_MAX]")
        if not self.q_pump < 0:
            errors.append(f"Q_PUMP ({self.q_pump}) must be negative")
        if self.seconds_per_period <= 0 or self.volume_scale <= 0:
            errors.append("SECONDS_PER_PERIOD and VOLUME_SCALE must be positive")
        if errors:
            raise ConfigError("Invalid plant configuration:\n" + "\n".join(f"  - {e}" for e in errors))

    @classmethod
    def from_file(cls, path) -> "PlantConfig":
        try:
            with open(path) as fh:
                raw = dotenv_values(stream=fh)
        except OSError as e:
            raise IoError(f"cannot read plant file {path}: {e}") from e
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: Dict[str, Optional[str]]) -> "PlantConfig":
        unknown = sorted(set(raw) - set(_PLANT_KEYS) - set(_HPF_KEYS))
        if unknown:
            raise ConfigError(f"unknown plant keys: {', '.join(unknown)}")
        values, hpf_values = {}, {}
        for key, text in raw.items():
            if text is None or not text.strip():
                raise ParseError("missing value", field=key)
            try:
                if key == "HPF_K":
                    hpf_values["k"] = tuple(float(x) for x in text.split(","))
                elif key in _HPF_KEYS:
                    hpf_values[_HPF_KEYS[key]] = float(text)
                else:
                    values[_PLANT_KEYS[key]] = float(text)
            except ValueError:
                raise ParseError(f"not a number: '{text}'", field=key) from None
        plant = cls(**values, hpf=HydroPowerFunction(**hpf_values))
        plant.validate()
        return plant

    def to_mapping(self) -> Dict[str, str]:
        out = {key: repr(getattr(self, attr)) for key, attr in _PLANT_KEYS.items()}
        out.update({"HPF_L_SUM": repr(self.hpf.l_sum), "HPF_K": ",".join(repr(k) for k in self.hpf.k),
                    "HPF_L_LB": repr(self.hpf.l_lb), "HPF_R0": repr(self.hpf.r0)})
        return out


@dataclass
class Scenario:
    price: List[float]
    inflow: List[float]
    plant: PlantConfig = field(default_factory=PlantConfig)

    @property
    def periods(self) -> int:
        return len(self.price)

    def validate(self) -> None:
        errors = []
        if not self.price:
            errors.append("scenario has no periods")
        if len(self.inflow) != len(self.price):
            errors.append(f"{len(self.price)} prices but {len(self.inflow)} inflows")
        if not all(math.isfinite(x) for x in list(self.price) + list(self.inflow)):
            errors.append("prices and inflows must be finite")
        if errors:
            raise ValidationError("Invalid scenario:\n" + "\n".join(f"  - {e}" for e in errors))
        self.plant.validate()


def load_scenario_csv(path, plant: Optional[PlantConfig] = None) -> Scenario:
    """Read period, price and inflow columns; rows are sorted by period, which must be consecutive."""
    try:
        frame = pd.read_csv(path, skipinitialspace=True)
    except OSError as e:
        raise IoError(f"cannot read scenario {path}: {e}") from e
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise ParseError(f"malformed scenario CSV {path}: {e}") from e
    frame.columns = [str(c).strip().lower() for c in frame.columns]
    for column in SCENARIO_COLUMNS:
        if column not in frame.columns:
            raise ParseError(f"scenario CSV {path} lacks a column", field=column)
    for column in SCENARIO_COLUMNS:
        numeric = pd.to_numeric(frame[column], errors="coerce")
        bad = numeric.isna()
        if bad.any():
            row = int(np.flatnonzero(bad.to_numpy())[0])
            raise ParseError(f"non-numeric value '{frame[column].iloc[row]}'", line=row + 2, field=column)
        frame[column] = numeric
    frame = frame.sort_values("period", kind="stable")
    periods = frame["period"].to_numpy()
    if len(periods) and not np.array_equal(periods, np.arange(periods[0], periods[0] + len(periods))):
        raise ParseError("periods must be consecutive integers", field="period")
    scenario = Scenario(frame["price"].astype(float).tolist(), frame["inflow"].astype(float).tolist(),
                        plant or PlantConfig())
    scenario.validate()
    return scenario


@dataclass
class SthsModelSpec:
    scenario: Scenario
    mesh: SimplicialPartition
    cover: BicliqueCover
    coloring: Optional[Coloring] = None
    has_higher_rank: bool = False

    @classmethod
    def prepare(cls, scenario: Scenario, mesh: SimplicialPartition, strategy: str = "exact",
                seed: Optional[int] = None) -> "SthsModelSpec":
        """Conflict analysis, colouring (only if needed) and biclique cover of the mesh."""
        hg = conflict_hypergraph(mesh)
        coloring = None
        if hg.rank >= 3:
            bh = build_blocking_hypergraph(to_set_system(mesh), hg, mesh.dim)
            coloring = color_blocking(bh, mesh.simplices)
        cover = cover_bicliques(conflict_graph(hg), strategy=strategy, seed=seed,
                                partition=mesh if strategy != "exact" else None)
        return cls(scenario, mesh, cover, coloring, hg.rank >= 3)


def check_domain(mesh: SimplicialPartition, plant: PlantConfig) -> None:
    """The mesh must tile exactly the plant box [Q_MIN, Q_MAX] x [R_MIN, R_MAX]."""
    if mesh.dim != 2:
        raise DomainMismatch(f"the hydropower mesh must be planar, got dimension {mesh.dim}")
    lo, hi = mesh.bounding_box()
    qmin, rmin, qmax, rmax = plant.box
    scale = max(abs(qmax - qmin), abs(rmax - rmin))
    if not (np.allclose(lo, (qmin, rmin), atol=DOMAIN_TOL * scale)
            and np.allclose(hi, (qmax, rmax), atol=DOMAIN_TOL * scale)):
        raise DomainMismatch(f"mesh spans {tuple(lo)}..{tuple(hi)}, plant box is "
                             f"({qmin}, {rmin})..({qmax}, {rmax})")
    area = sum(simplex_volume(mesh.coords(s)) for s in mesh.simplices)
    box_area = (qmax - qmin) * (rmax - rmin)
    if abs(area - box_area) > 1e-6 * box_area:
        raise DomainMismatch(f"mesh covers area {area:g} of the plant box area {box_area:g}")


def build_sths(spec: SthsModelSpec) -> MilpModel:
    scenario, mesh, plant = spec.scenario, spec.mesh, spec.scenario.plant
    scenario.validate()
    check_domain(mesh, plant)
    if spec.has_higher_rank and spec.coloring is None:
        raise SpecIncomplete("the mesh has conflicts of size >= 3 but no colouring was given")
    T = scenario.periods
    vertices = list(range(mesh.num_vertices))
    vq, vr, phi = mesh.points[:, 0], mesh.points[:, 1], mesh.values
    K = len(spec.cover)
    q_colors = spec.coloring.q if spec.has_higher_rank else 0
    groups = pattern_groups(spec.coloring) if q_colors else []

    model = MilpModel("sths", metadata={"formulation": "sths", "periods": T, "bicliques": K, "colors": q_colors})
    for t in range(T):
        for v in vertices:
            model.continuous(f"lam_{t}_{v}", 0.0, 1.0)
        for ell in range(1, K + 1):
            model.binary(f"y_{t}_{ell}")
        for c in range(1, q_colors + 1):
            model.binary(f"z_{t}_{c}")
        model.binary(f"g_{t}")
        model.binary(f"u_{t}")
        model.continuous(f"p_{t}", -math.inf, math.inf)
        model.continuous(f"q_{t}", plant.q_pump, plant.q_max)
        if t == 0:
            model.continuous("r_0", plant.r_init, plant.r_init)
        else:
            model.continuous(f"r_{t}", plant.r_min, plant.r_max)
    model.continuous(f"r_{T}", plant.r_min, plant.r_max)

    coef = plant.balance_coefficient
    for t in range(T):
        lam = [f"lam_{t}_{v}" for v in vertices]
        g, u, p, q, r = f"g_{t}", f"u_{t}", f"p_{t}", f"q_{t}", f"r_{t}"
        model.constrain(f"hpf_power_{t}", [(p, 1.0)] + [(n, -phi[v]) for n, v in zip(lam, vertices)]
                        + [(u, -plant.p_pump)], "=", 0.0)
        model.constrain(f"hpf_flow_{t}", [(q, 1.0)] + [(n, -vq[v]) for n, v in zip(lam, vertices)]
                        + [(u, -plant.q_pump)], "=", 0.0)
        volume = [(r, 1.0)] + [(n, -vr[v]) for n, v in zip(lam, vertices)]
        model.constrain(f"hpf_vol_lo_{t}", volume + [(u, -plant.r_min)], ">=", 0.0)
        model.constrain(f"hpf_vol_hi_{t}", volume + [(u, -plant.r_max)], "<=", 0.0)
        model.constrain(f"hpf_conv_{t}", [(n, 1.0) for n in lam] + [(g, -1.0)], "=", 0.0)
        for ell, b in enumerate(spec.cover, start=1):
            y = f"y_{t}_{ell}"
            model.constrain(f"bic_{t}_{ell}_a", [(f"lam_{t}_{v}", 1.0) for v in b.A] + [(y, -1.0)], "<=", 0.0)
            model.constrain(f"bic_{t}_{ell}_b", [(f"lam_{t}_{v}", 1.0) for v in b.B] + [(y, 1.0)], "<=", 1.0)
        if q_colors:
            model.constrain(f"colsum_{t}", [(f"z_{t}_{c}", 1.0) for c in range(1, q_colors + 1)] + [(g, -1.0)],
                            "=", 0.0)
            for k, (pattern, group) in enumerate(groups, start=1):
                model.constrain(f"col_{t}_{k}", [(f"lam_{t}_{v}", 1.0) for v in group]
                                + [(f"z_{t}_{c}", -1.0) for c in sorted(pattern)], "<=", 0.0)
        model.constrain(f"mode_{t}", [(g, 1.0), (u, 1.0)], "<=", 1.0)
        model.constrain(f"balance_{t}", [(f"r_{t + 1}", 1.0), (r, -1.0), (q, coef)], "=",
                        coef * scenario.inflow[t])
    model.constrain("final", [(f"r_{T}", 1.0)], ">=", plant.r_final_min)
    model.set_objective([(f"p_{t}", scenario.price[t]) for t in range(T)], "maximize")
    log.info("sths: %d periods, %d bicliques, %d colours, %r", T, K, q_colors, model)
    return model


def extract_period_disjunction(model: MilpModel, t: int) -> MilpModel:
    """The period-t simplex disjunction with g_t fixed to 1, tagged for verify_formulation."""
    prefixes = (f"lam_{t}_", f"y_{t}_", f"z_{t}_")
    g = f"g_{t}"
    out = MilpModel(f"sths_period_{t}", metadata={"formulation": f"sths_period_{t}"})
    for v in model.variables:
        if v.name.startswith(prefixes):
            out.add_variable(type(v)(v.name, v.kind, v.lb, v.ub))
    names = (f"hpf_conv_{t}", f"colsum_{t}")
    families = (f"bic_{t}_", f"col_{t}_")
    for c in model.constraints:
        if c.name not in names and not c.name.startswith(families):
            continue
        fixed = sum(coef for name, coef in c.terms if name == g)
        terms = [(name, coef) for name, coef in c.terms if name != g]
        out.constrain(c.name, terms, c.sense, c.rhs - fixed)
    lam_prefix = f"lam_{t}_"
    out.metadata["blocks"] = [{"vertices": [int(v.name[len(lam_prefix):])], "vars": [v.name]}
                              for v in out.variables if v.name.startswith(lam_prefix)]
    return out


def evaluate_schedule(solution: Dict[str, float], scenario: Scenario,
                      hpf_oracle: Optional[Callable[[float, float], float]] = None) -> dict:
    """Re-price a schedule with the true hydropower function.

    Generating periods (g_t = 1) get phi(q_t, r_t); pumping periods get
    P_PUMP; idle periods produce nothing.
    rel_err is None when the true objective is zero but the PWL one is not.
    """
    plant = scenario.plant
    oracle = hpf_oracle or (lambda q, r: float(plant.hpf(q, r)))
    pwl_obj = nl_obj = 0.0
    errors = []
    residual = 0.0
    for t in range(scenario.periods):
        p = solution.get(f"p_{t}", 0.0)
        q = solution.get(f"q_{t}", 0.0)
        r = solution.get(f"r_{t}", 0.0)
        if solution.get(f"g_{t}", 0.0) > 0.5:
            true_power = oracle(q, r)
            errors.append(abs(p - true_power))
        elif solution.get(f"u_{t}", 0.0) > 0.5:
            true_power = plant.p_pump
        else:
            true_power = 0.0
        pwl_obj += scenario.price[t] * p
        nl_obj += scenario.price[t] * true_power
        step = (solution.get(f"r_{t + 1}", 0.0) - r
                + plant.balance_coefficient * (q - scenario.inflow[t]))
        residual = max(residual, abs(step))
    if nl_obj != 0:
        rel_err = abs(pwl_obj - nl_obj) / abs(nl_obj)
    else:
        rel_err = 0.0 if pwl_obj == 0 else None
    return {
        "pwl_obj": pwl_obj,
        "nl_obj": nl_obj,
        "rel_err": rel_err,
        "avg_abs_hpf_err": float(np.mean(errors)) if errors else 0.0,
        "generating_periods": len(errors),
        "max_balance_residual": residual,
    }
