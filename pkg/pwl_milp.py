#!/usr/bin/env python3
"""
PWL-MILP batch jobs

Job 1: Fit the built-in test functions and tabulate triangle counts
Job 2: Run the formulation pipeline on every fitted mesh and tabulate model sizes

Single stages are available through the CLI (python -m src.main --help).
"""

import argparse
import logging
import os
import sys
from pathlib import Path

import pandas as pd

# Add src to path
sys.path.insert(0, str(Path(__file__).parent / 'src'))

from src.config import CliConfig
from src.errors import PwlError, exit_code_for
from src.fitting import FitConfig, fit
from src.mesh import load_mesh, save_mesh
from src.milp import FORMULATIONS, DisjunctionSpec, build_formulation
from src.models.milp_model import size_report
from src.pipeline import run_pipeline
from src.target_functions import get_function

DEFAULT_FUNCTIONS = ("f1", "f2", "f3", "f4", "f5")


class ExperimentJobs:
    def __init__(self, config: CliConfig, functions=DEFAULT_FUNCTIONS, eps: float = 0.1):
        self.config = config
        self.functions = list(functions)
        self.eps = eps
        self.mesh_dir = os.path.join(config.out_dir, "meshes")

    def mesh_path(self, name: str) -> str:
        return os.path.join(self.mesh_dir, f"{name}_eps{self.eps:g}.json")

    def job1_fit_table(self) -> pd.DataFrame:
        """Fit every function at eps and write fit_table.csv."""
        print(f"📐 Fitting {len(self.functions)} functions at eps={self.eps:g}")
        os.makedirs(self.mesh_dir, exist_ok=True)
        rows = []
        for name in self.functions:
            f = get_function(name)
            cfg = FitConfig(eps=self.eps, alpha_lb=self.config.alpha_lb, theta=self.config.theta,
                            seed=self.config.seed, max_iter=self.config.max_iter,
                            refine_cap=self.config.refine_cap, sample_budget=self.config.sample_budget)
            try:
                pwl, report = fit(f, cfg)
            except PwlError as e:
                print(f"❌ {name}: {e}")
                rows.append({"function": name, "triangles": None, "points": None, "eps_hat_max": None,
                             "status": type(e).__name__})
                continue
            save_mesh(pwl.partition, self.mesh_path(name))
            rows.append({"function": name, "triangles": pwl.partition.num_simplices,
                         "points": pwl.partition.num_vertices, "eps_hat_max": report.final_eps_hat,
                         "status": "ok"})
            print(f"✅ {name}: {pwl.partition.num_simplices} triangles")
        table = pd.DataFrame(rows)
        table.to_csv(os.path.join(self.config.out_dir, "fit_table.csv"), index=False)
        return table

    def job2_formulation_sizes(self, reduce: bool = True) -> pd.DataFrame:
        """Pipeline statistics and the size of every formulation for each fitted mesh."""
        print("🧮 Building formulations for the fitted meshes")
        rows = []
        for name in self.functions:
            path = self.mesh_path(name)
            if not os.path.exists(path):
                print(f"⚠️  {name}: no mesh at {path}, run job 1 first")
                continue
            result = run_pipeline(load_mesh(path), reduce=reduce, seed=self.config.seed,
                                  budget=self.config.enum_budget)
            analysis = result.analysis
            spec = DisjunctionSpec.from_partition(result.partition, result.cover, result.coloring, result.hypergraph)
            for which in FORMULATIONS:
                try:
                    sizes = size_report(build_formulation(spec, which))
                except PwlError as e:
                    logging.getLogger(__name__).warning("%s/%s skipped: %s", name, which, e)
                    continue
                rows.append({"function": name, "rank": analysis["rank"], "q": analysis["q"],
                             "cover_size": analysis["cover_size"], **sizes})
            print(f"✅ {name}: rank {analysis['rank']}, {analysis['cover_size']} bicliques")
        table = pd.DataFrame(rows)
        table.to_csv(os.path.join(self.config.out_dir, "formulation_sizes.csv"), index=False)
        return table


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description='PWL-MILP batch jobs')
    parser.add_argument('--job', choices=['fit', 'sizes', 'all'], default='all')
    parser.add_argument('--eps', type=float, default=0.1)
    parser.add_argument('--functions', nargs='+', default=list(DEFAULT_FUNCTIONS))
    parser.add_argument('--no-reduce', action='store_true')
    parser.add_argument('--out', dest='out_dir')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--config')
    parser.add_argument('--verbose', '-v', action='store_true')
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)

    try:
        config = CliConfig.build(args.config, out_dir=args.out_dir, seed=args.seed)
        os.makedirs(config.out_dir, exist_ok=True)
        jobs = ExperimentJobs(config, args.functions, args.eps)
        if args.job in ('fit', 'all'):
            print(jobs.job1_fit_table().to_string(index=False))
        if args.job in ('sizes', 'all'):
            print(jobs.job2_formulation_sizes(reduce=not args.no_reduce).to_string(index=False))
    except PwlError as e:
        print(f"❌ {type(e).__name__}: {e}")
        return exit_code_for(e)
    return 0


if __name__ == "__main__":
    sys.exit(main())
