import logging
import math
from typing import Any, Dict, Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import pandas as pd  # noqa: E402

from src.fitting import FitReport  # noqa: E402
from src.models.partition import SimplicialPartition  # noqa: E402

log = logging.getLogger(__name__)

CSV_COLUMNS = ["iteration", "n_points", "n_triangles", "eps_hat_max", "ruppert_insertions", "sampled_simplices"]


class FitReporter:
    """Tables and SVG plots for one fitting run."""

    def __init__(self, report: FitReport):
        self.report = report

    def generate_summary(self) -> Dict[str, Any]:
        report = self.report
        cfg = report.config
        partition = report.partition
        if not report.records:
            return {
                "function": report.function,
                "eps": cfg.eps,
                "iterations": 0,
                "n_points": 0,
                "n_triangles": 0,
                "eps_hat_max": None,
                "target": cfg.target,
                "error_bound": None,
            }
        last = report.records[-1]
        return {
            "function": report.function,
            "eps": cfg.eps,
            "theta": cfg.theta,
            "alpha_lb": cfg.alpha_lb,
            "seed": cfg.seed,
            "iterations": report.iterations,
            "n_points": partition.num_vertices if partition is not None else last.num_points,
            "n_triangles": partition.num_simplices if partition is not None else last.num_triangles,
            "eps_hat_max": report.final_eps_hat,
            "target": cfg.target,
            "error_bound": report.error_bound if math.isfinite(report.error_bound) else None,
            "ruppert_insertions": sum(r.ruppert_insertions for r in report.records),
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [(r.iteration, r.num_points, r.num_triangles, r.eps_hat_max, r.ruppert_insertions,
                 r.sampled_simplices) for r in self.report.records]
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    def write_csv(self, path) -> None:
        self.to_frame().to_csv(path, index=False)
        log.debug("wrote %d iteration rows to %s", len(self.report.records), path)

    def write_convergence_svg(self, path) -> None:
        df = self.to_frame()
        fig, ax = plt.subplots(figsize=(7, 4.5))
        try:
            if len(df):
                ax.semilogy(df["iteration"], df["eps_hat_max"], marker=".", label="sampled max error")
            ax.axhline(self.report.config.target, color="tab:red", linestyle="--", label="(1 - theta) eps")
            ax.set_xlabel("iteration")
            ax.set_ylabel("eps_hat_max")
            ax.set_title(f"{self.report.function}: eps = {self.report.config.eps:g}")
            ax.legend()
            fig.tight_layout()
            fig.savefig(path, format="svg")
        finally:
            plt.close(fig)

    def write_mesh_svg(self, path, partition: Optional[SimplicialPartition] = None) -> None:
        write_mesh_svg(partition or self.report.partition, path, title=self.report.function)


def write_mesh_svg(partition: SimplicialPartition, path, title: str = "") -> None:
    """Triangulation shaded by the interpolated values."""
    tri = mtri.Triangulation(partition.points[:, 0], partition.points[:, 1],
                             [list(s) for s in partition.simplices])
    fig, ax = plt.subplots(figsize=(6, 6))
    try:
        shade = ax.tripcolor(tri, partition.values, shading="gouraud", cmap="viridis")
        ax.triplot(tri, color="k", linewidth=0.3)
        fig.colorbar(shade, ax=ax, label="f_hat")
        ax.set_aspect("equal")
        ax.set_title(f"{title} ({partition.num_simplices} triangles)".strip())
        fig.tight_layout()
        fig.savefig(path, format="svg")
    finally:
        plt.close(fig)
