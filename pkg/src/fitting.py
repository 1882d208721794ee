"""Adaptive PWL interpolation of a bivariate function with a guaranteed error bound.

Loop: Delaunay triangulation of the domain corners, then repeatedly
    Lipschitz correction (Ruppert refinement) -> sample every new triangle ->
    stop if the sampled error is at most (1 - theta) * eps -> insert the worst point.

Each triangle T is sampled with covering radius r_T = theta * eps / (L + L_T),
L_T being the gradient norm of the interpolant on T, so the true error on T
is at most eps_hat_T + theta * eps.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.delaunay import Triangulation2D, delaunay
from src.errors import Degenerate, DuplicatePoint, MaxIterExceeded, ValidationError
from src.geometry import barycentric_coordinates, is_degenerate, simplex_metrics
from src.mesh import grid_triangulation
from src.models.partition import SimplicialPartition
from src.models.pwl_function import PwlFunction
from src.ruppert import DEFAULT_MAX_INSERTIONS, RuppertRefiner
from src.sampling import DEFAULT_CELL_BUDGET, mps_sample
from src.target_functions import TargetFunction

log = logging.getLogger(__name__)

DEFAULT_ALPHA_LB = 18.0
DEFAULT_THETA = 0.5
DEFAULT_MAX_ITER = 100000
AUDIT_STEP_FACTOR = 5.0
AUDIT_GRID = 1000


@dataclass
class FitConfig:
    eps: float
    alpha_lb: float = DEFAULT_ALPHA_LB
    theta: float = DEFAULT_THETA
    seed: Optional[int] = 1
    max_iter: int = DEFAULT_MAX_ITER
    refine_cap: int = DEFAULT_MAX_INSERTIONS
    sample_budget: int = DEFAULT_CELL_BUDGET

    def __post_init__(self):
        errors = []
        if not self.eps > 0:
            errors.append(f"eps must be positive, got {self.eps}")
        if not 0 < self.alpha_lb < 20:
            errors.append(f"alpha_lb must lie in (0, 20) degrees, got {self.alpha_lb}")
        if not 0 < self.theta <= 0.5:
            errors.append(f"theta must lie in (0, 0.5], got {self.theta}")
        if self.max_iter < 0:
            errors.append(f"max_iter must be >= 0, got {self.max_iter}")
        if self.sample_budget < 1:
            errors.append(f"sample_budget must be >= 1, got {self.sample_budget}")
        if errors:
            raise ValidationError("Invalid fit configuration:\n" + "\n".join(f"  - {e}" for e in errors))

    @property
    def target(self) -> float:
        return (1.0 - self.theta) * self.eps


@dataclass
class IterationRecord:
    iteration: int
    num_points: int
    num_triangles: int
    eps_hat_max: float
    inserted_point: Optional[Tuple[float, float]] = None
    ruppert_insertions: int = 0
    sampled_simplices: int = 0


@dataclass
class FitReport:
    function: str
    config: FitConfig
    records: List[IterationRecord] = field(default_factory=list)
    partition: Optional[SimplicialPartition] = None
    radii: Optional[np.ndarray] = None
    error_bound: float = math.inf

    @property
    def iterations(self) -> int:
        return len(self.records)

    @property
    def final_eps_hat(self) -> float:
        return self.records[-1].eps_hat_max if self.records else math.inf

    def __repr__(self):
        return (f"<FitReport(function='{self.function}', iterations={self.iterations}, "
                f"eps_hat={self.final_eps_hat:.4g}, bound={self.error_bound:.4g})>")


@dataclass
class SimplexEstimate:
    eps_hat: float
    argmax: np.ndarray
    radius: float
    lipschitz_hat: float
    num_samples: int


@dataclass
class ErrorEstimate:
    eps_hat_max: float
    p_max: Optional[np.ndarray]
    simplex_index: int
    per_simplex: List[SimplexEstimate]
    sampled: int = 0

    def ranked(self) -> List[int]:
        """Simplex indices by decreasing sampled error, ties by index."""
        return sorted(range(len(self.per_simplex)), key=lambda i: (-self.per_simplex[i].eps_hat, i))


def interpolant_gradient(simplex: Sequence[int], partition: SimplicialPartition) -> Tuple[np.ndarray, float]:
    """Gradient of the affine interpolant on the simplex and its Euclidean norm."""
    coords = partition.points[list(simplex)]
    if is_degenerate(coords):
        raise Degenerate(f"simplex {tuple(simplex)} has (near) zero volume")
    values = partition.values[list(simplex)]
    grad = np.linalg.solve(coords[1:] - coords[0], values[1:] - values[0])
    return grad, float(np.linalg.norm(grad))


def lipschitz_bound_check(simplex: Sequence[int], partition: SimplicialPartition, lipschitz: float) -> dict:
    """Theoretical bounds on the interpolant's gradient norm: L ell_max / delta_min and (d=2) L / sin(alpha_min)."""
    metrics = simplex_metrics(simplex, partition.points)
    bound_2d = None
    if metrics.alpha_min is not None:
        bound_2d = lipschitz / math.sin(math.radians(metrics.alpha_min))
    return {
        "bound_general": lipschitz * metrics.ell_max / metrics.delta_min,
        "bound_2d": bound_2d,
    }


def _estimate_simplex(simplex, partition: SimplicialPartition, f: TargetFunction,
                      config: FitConfig) -> SimplexEstimate:
    _, grad_norm = interpolant_gradient(simplex, partition)
    radius = config.theta * config.eps / (f.lipschitz + grad_norm)
    samples = mps_sample(simplex, partition.points, radius, seed=config.seed, budget=config.sample_budget)
    coords = partition.points[list(simplex)]
    if len(samples) == 0:
        return SimplexEstimate(0.0, coords.mean(axis=0), radius, grad_norm, 0)
    lam = barycentric_coordinates(coords, samples.points)
    errors = np.abs(f(samples.points) - lam @ partition.values[list(simplex)])
    k = int(np.argmax(errors))
    return SimplexEstimate(float(errors[k]), samples.points[k], radius, grad_norm, len(samples))


def estimate_error(partition: SimplicialPartition, f: TargetFunction, config: FitConfig,
                   cache: Optional[Dict[tuple, SimplexEstimate]] = None) -> ErrorEstimate:
    """Sample every simplex and return the largest sampled deviation |f - f_hat| and where it occurs.

    With a cache, simplices seen in an earlier call are not sampled again;
    entries of simplices no longer in the partition are dropped.
    """
    per_simplex = []
    sampled = 0
    fresh = {}
    for s in partition.simplices:
        est = cache.get(s) if cache is not None else None
        if est is None:
            est = _estimate_simplex(s, partition, f, config)
            sampled += 1
        fresh[s] = est
        per_simplex.append(est)
    if cache is not None:
        cache.clear()
        cache.update(fresh)

    best, where = -1.0, -1
    for i, est in enumerate(per_simplex):
        if est.eps_hat > best:
            best, where = est.eps_hat, i
    p_max = per_simplex[where].argmax if where >= 0 else None
    return ErrorEstimate(max(best, 0.0), p_max, where, per_simplex, sampled)


class PwlFitter:
    """Runs the fitting loop for one target function."""

    def __init__(self, f: TargetFunction, config: FitConfig):
        self.f = f
        self.config = config
        self.tri: Optional[Triangulation2D] = None
        self.values: List[float] = []
        self.cache: Dict[tuple, SimplexEstimate] = {}
        self.report = FitReport(function=f.name, config=config)

    def _sync_values(self) -> None:
        start = len(self.values)
        if start < self.tri.num_points:
            new = np.asarray(self.tri.points[start:], dtype=float)
            self.values.extend(float(v) for v in self.f(new))

    def _partition(self) -> SimplicialPartition:
        return SimplicialPartition(self.tri.point_array(), np.asarray(self.values), self.tri.triangles,
                                   provenance=f"fit {self.f.name} eps={self.config.eps} seed={self.config.seed}")

    def _insert_worst(self, estimate: ErrorEstimate):
        for i in estimate.ranked():
            point = estimate.per_simplex[i].argmax
            if self.tri.find_vertex(point) is not None:
                log.debug("sample %s coincides with a vertex; trying the next simplex", point)
                continue
            try:
                _, created = self.tri.insert(point)
            except DuplicatePoint:
                continue
            return tuple(float(c) for c in point), created
        return None, []

    def run(self) -> Tuple[PwlFunction, FitReport]:
        cfg = self.config
        self.tri = delaunay(self.f.corners())
        refiner = RuppertRefiner(cfg.alpha_lb, max_insertions=cfg.refine_cap)
        seeds = None
        insertions = 0
        while True:
            before = self.tri.num_points
            refiner.refine(self.tri, seeds)
            self._sync_values()
            partition = self._partition()
            estimate = estimate_error(partition, self.f, cfg, self.cache)
            record = IterationRecord(iteration=len(self.report.records), num_points=partition.num_vertices,
                                     num_triangles=partition.num_simplices, eps_hat_max=estimate.eps_hat_max,
                                     ruppert_insertions=self.tri.num_points - before,
                                     sampled_simplices=estimate.sampled)
            self.report.records.append(record)
            self._finish(partition, estimate)
            log.debug("fit %s: iteration %d, %d points, %d triangles, eps_hat %.6g",
                      self.f.name, record.iteration, record.num_points, record.num_triangles,
                      record.eps_hat_max)
            if estimate.eps_hat_max <= cfg.target:
                break
            if insertions >= cfg.max_iter:
                raise MaxIterExceeded(
                    f"fit of '{self.f.name}' did not reach eps_hat <= {cfg.target:g} after {insertions} "
                    f"insertions (eps_hat={estimate.eps_hat_max:g}); L may be underestimated",
                    partial=(PwlFunction(partition), self.report))
            point, seeds = self._insert_worst(estimate)
            if point is None:
                raise MaxIterExceeded(f"no insertable sample point left for '{self.f.name}'",
                                      partial=(PwlFunction(partition), self.report))
            record.inserted_point = point
            insertions += 1
            self._sync_values()

        log.info("fit %s: %d triangles, %d points, eps_hat %.4g after %d iterations",
                 self.f.name, self.report.partition.num_simplices, self.report.partition.num_vertices,
                 self.report.final_eps_hat, self.report.iterations)
        return PwlFunction(self.report.partition), self.report

    def _finish(self, partition: SimplicialPartition, estimate: ErrorEstimate) -> None:
        self.report.partition = partition
        self.report.radii = np.array([e.radius for e in estimate.per_simplex])
        self.report.error_bound = max(
            (e.eps_hat + (self.f.lipschitz + e.lipschitz_hat) * e.radius for e in estimate.per_simplex),
            default=0.0)


def fit(f: TargetFunction, config: FitConfig) -> Tuple[PwlFunction, FitReport]:
    """Fit a PWL interpolant with max |f - f_hat| <= config.eps on f's rectangular domain."""
    return PwlFitter(f, config).run()


# -- audits ------------------------------------------------------------------

@dataclass
class AuditResult:
    max_error: float
    argmax: Optional[np.ndarray]
    num_nodes: int


def _lattice(lo: float, hi: float, xs: np.ndarray) -> np.ndarray:
    i0 = np.searchsorted(xs, lo - 1e-12, side="left")
    i1 = np.searchsorted(xs, hi + 1e-12, side="right")
    return xs[i0:i1]


def audit_error(pwl: PwlFunction, f: TargetFunction, n: Optional[int] = None,
                radii: Optional[Sequence[float]] = None,
                step_factor: float = AUDIT_STEP_FACTOR) -> AuditResult:
    """Dense-grid check of max |f - f_hat|.

    With n, every simplex is checked at the nodes of a global n x n lattice
    over the domain. With radii (one covering radius per simplex, as stored in
    FitReport.radii), each simplex gets its own lattice of spacing
    r_T / step_factor, finer than the sampling that certified it.
    """
    p = pwl.partition
    lo, hi = p.bounding_box()
    if radii is None and n is None:
        n = AUDIT_GRID
    if n is not None:
        global_axes = [np.linspace(lo[k], hi[k], n) for k in range(2)]
    worst, where, count = 0.0, None, 0
    for i, s in enumerate(p.simplices):
        coords = p.points[list(s)]
        clo, chi = coords.min(axis=0), coords.max(axis=0)
        if n is not None:
            axes = [_lattice(clo[k], chi[k], global_axes[k]) for k in range(2)]
        else:
            step = radii[i] / step_factor
            axes = [np.append(np.arange(clo[k], chi[k], step), chi[k]) for k in range(2)]
        if any(len(a) == 0 for a in axes):
            continue
        gx, gy = np.meshgrid(*axes, indexing="ij")
        nodes = np.column_stack([gx.ravel(), gy.ravel()])
        lam = barycentric_coordinates(coords, nodes)
        inside = lam.min(axis=1) >= -1e-12
        if not inside.any():
            continue
        nodes, lam = nodes[inside], lam[inside]
        err = np.abs(f(nodes) - lam @ p.values[list(s)])
        count += len(nodes)
        k = int(np.argmax(err))
        if err[k] > worst:
            worst, where = float(err[k]), nodes[k]
    return AuditResult(worst, where, count)


def grid_error(f: TargetFunction, n: int, seed: Optional[int] = None, audit_n: int = AUDIT_GRID) -> float:
    """Audited max error of the interpolant on an n x n grid triangulation with random diagonals."""
    grid = grid_triangulation(n, n, f.domain, diag_rule="random", seed=seed,
                              f=lambda x, y: f(np.column_stack([x, y])))
    return audit_error(PwlFunction(grid), f, n=audit_n).max_error


def grid_size_for_tolerance(f: TargetFunction, eps: float, seed: Optional[int] = None,
                            audit_n: int = AUDIT_GRID, start: int = 2, max_n: int = 4096) -> Tuple[int, int, float]:
    """Smallest grid resolution n whose audited error is <= eps.

    The resolution is doubled until the audit passes and then bisected.
    Returns (n, number of triangles, audited error).
    """
    lo, hi = None, start
    err = grid_error(f, hi, seed, audit_n)
    while err > eps:
        if hi >= max_n:
            raise MaxIterExceeded(f"grid resolution {max_n} does not reach eps={eps}")
        lo, hi = hi, min(2 * hi, max_n)
        err = grid_error(f, hi, seed, audit_n)
    best_err = err
    lo = lo if lo is not None else 0
    while hi - lo > 1:
        mid = (lo + hi) // 2
        mid_err = grid_error(f, mid, seed, audit_n)
        if mid_err <= eps:
            hi, best_err = mid, mid_err
        else:
            lo = mid
    log.info("grid for %s at eps=%g: n=%d, %d triangles, error %.4g", f.name, eps, hi, 2 * hi * hi, best_err)
    return hi, 2 * hi * hi, best_err
