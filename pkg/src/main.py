import argparse
import datetime
import json
import logging
import os
import sys
from typing import Callable, Dict, Optional

from src.biclique import STRATEGIES, cover_bicliques, conflict_graph
from src.config import CliConfig
from src.conflict import reduce_rank
from src.errors import MaxIterExceeded, PwlError, exit_code_for
from src.fit_reporter import FitReporter, write_mesh_svg
from src.fitting import FitConfig, audit_error, fit, grid_size_for_tolerance
from src.lp_format import read_lp, write_lp
from src.mesh import load_mesh, save_mesh, to_set_system
from src.milp import FORMULATIONS, DisjunctionSpec, build_formulation
from src.models.milp_model import size_report
from src.models.run_record import RunRecord
from src.pipeline import analysis_summary, analyze, run_pipeline, write_artifacts, write_json
from src.run_record_dao import RunRecordDao
from src.solver_adapter import solve_external
from src.sths import (PlantConfig, SthsModelSpec, build_sths, evaluate_schedule, extract_period_disjunction,
                      load_scenario_csv)
from src.target_functions import builtin_names, from_expression, get_function
from src.verifier import verify_formulation

log = logging.getLogger(__name__)

COMMANDS = ("fit", "analyze", "reduce", "cover", "formulate", "verify", "sths", "solve", "pipeline")


class PwlCli:
    def __init__(self, config: CliConfig, dao_factory: Callable[[str], RunRecordDao] = RunRecordDao):
        """CLI runner; every command returns a summary dict and writes its artifacts under config.out_dir."""
        self.config = config
        self.dao_factory = dao_factory

    def out(self, name: str) -> str:
        return os.path.join(self.config.out_dir, name)

    def run(self, args: argparse.Namespace) -> int:
        os.makedirs(self.config.out_dir, exist_ok=True)
        started = datetime.datetime.now()
        summary: Dict = {}
        exit_code = 0
        try:
            summary = getattr(self, f"cmd_{args.command}")(args)
        except PwlError as e:
            exit_code = exit_code_for(e)
            summary = {"error": type(e).__name__, "message": str(e)}
            print(f"Error ({type(e).__name__}): {e}", file=sys.stderr)
        finally:
            if self.config.record:
                self.record(args.command, started, exit_code, summary)
        return exit_code

    def record(self, command: str, started: datetime.datetime, exit_code: int, summary: Dict) -> None:
        try:
            dao = self.dao_factory(self.config.database_url)
            dao.add(RunRecord(command=command, seed=self.config.seed, started_at=started,
                              finished_at=datetime.datetime.now(), exit_code=exit_code,
                              summary=json.dumps(summary, sort_keys=True, default=str),
                              out_dir=self.config.out_dir))
        except Exception as e:
            log.warning("could not record the run: %s", e)

    # -- commands -------------------------------------------------------------

    def cmd_fit(self, args) -> Dict:
        cfg = self.config
        if args.expr:
            f = from_expression(args.expr, tuple(args.domain), args.lipschitz)
        else:
            f = get_function(args.fn)
        fit_cfg = FitConfig(eps=args.eps, alpha_lb=cfg.alpha_lb, theta=cfg.theta, seed=cfg.seed,
                            max_iter=cfg.max_iter, refine_cap=cfg.refine_cap, sample_budget=cfg.sample_budget)
        print(f"Fitting {f.name} with eps={args.eps:g} (seed {cfg.seed})...")
        try:
            pwl, report = fit(f, fit_cfg)
        except MaxIterExceeded as e:
            if e.partial is not None:
                pwl, report = e.partial
                save_mesh(pwl.partition, self.out("mesh_partial.json"))
                FitReporter(report).write_csv(self.out("report.csv"))
                print(f"Partial mesh written to {self.out('mesh_partial.json')}")
            raise

        reporter = FitReporter(report)
        save_mesh(pwl.partition, self.out("mesh.json"))
        reporter.write_csv(self.out("report.csv"))
        reporter.write_convergence_svg(self.out("convergence.svg"))
        reporter.write_mesh_svg(self.out("mesh.svg"), pwl.partition)
        summary = reporter.generate_summary()
        if args.audit:
            audit = audit_error(pwl, f, radii=report.radii) if report.radii is not None else audit_error(pwl, f)
            summary["audit_max_error"] = audit.max_error
            summary["audit_nodes"] = audit.num_nodes
        if args.compare_grid:
            n, triangles, err = grid_size_for_tolerance(f, args.eps, seed=cfg.seed)
            summary["grid"] = {"n": n, "triangles": triangles, "audit_error": err}
        write_json(summary, self.out("fit_summary.json"))
        print(f"{summary['n_triangles']} triangles after {summary['iterations']} iterations, "
              f"eps_hat_max={summary['eps_hat_max']:.4g}")
        return summary

    def cmd_analyze(self, args) -> Dict:
        partition = load_mesh(args.mesh)
        result = analyze(partition, self.config.enum_budget)
        result.cover = cover_bicliques(conflict_graph(result.hypergraph), strategy="exact")
        summary = analysis_summary(result)
        write_json(summary, self.out("analysis.json"))
        print(f"|V|={summary['num_vertices']} m={summary['num_simplices']} rank={summary['rank']} "
              f"nu={summary['nu']} mu={summary['mu']} beta={summary['beta']} q={summary['q']} "
              f"cover={summary['cover_size']}")
        return summary

    def cmd_reduce(self, args) -> Dict:
        partition = load_mesh(args.mesh)
        reduced, splits = reduce_rank(partition, args.value_rule, budget=self.config.enum_budget,
                                      max_splits=args.max_splits)
        save_mesh(reduced, self.out("mesh.json"))
        result = analyze(reduced, self.config.enum_budget)
        summary = {
            "splits": [{"edge": list(s.edge), "w": s.w, "rank": s.k, "removed": s.removed, "created": s.created}
                       for s in splits],
            "num_vertices": reduced.num_vertices,
            "num_simplices": reduced.num_simplices,
            "rank": result.hypergraph.rank,
        }
        write_json(summary, self.out("reduce.json"))
        print(f"{len(splits)} splits, final rank {result.hypergraph.rank}")
        return summary

    def cmd_cover(self, args) -> Dict:
        partition = load_mesh(args.mesh)
        result = analyze(partition, self.config.enum_budget)
        cover = cover_bicliques(conflict_graph(result.hypergraph), strategy=args.strategy, k=args.k,
                                n_lines=args.lines, seed=self.config.seed,
                                partition=partition if args.strategy != "exact" else None)
        summary = cover.to_dict()
        write_json(summary, self.out("cover.json"))
        print(f"{len(cover)} bicliques cover {cover.num_host_edges} conflict edges")
        return summary

    def _spec(self, partition, strategy: str = "exact") -> DisjunctionSpec:
        result = analyze(partition, self.config.enum_budget)
        cover = cover_bicliques(conflict_graph(result.hypergraph), strategy=strategy, seed=self.config.seed,
                                partition=partition if strategy != "exact" else None)
        return DisjunctionSpec.from_partition(partition, cover, result.coloring, result.hypergraph)

    def cmd_formulate(self, args) -> Dict:
        partition = load_mesh(args.mesh)
        model = build_formulation(self._spec(partition, args.strategy), args.formulation, args.with_output)
        write_lp(model, self.out(f"{args.formulation}.lp"))
        summary = size_report(model)
        write_json(summary, self.out(f"{args.formulation}_size.json"))
        print(f"{args.formulation}: {summary['rows']} rows, {summary['cols']} columns, "
              f"{summary['binaries']} binaries")
        return summary

    def cmd_verify(self, args) -> Dict:
        partition = load_mesh(args.mesh)
        spec = self._spec(partition)
        reports = {}
        for which in args.formulation or ["gib"]:
            report = verify_formulation(build_formulation(spec, which), to_set_system(partition))
            reports[which] = report.to_dict()
            status = "OK" if report.ok else "FAILED"
            print(f"{which}: {status} (sound={report.sound}, complete={report.complete}, "
                  f"{report.reachable_assignments}/{report.assignments} assignments reachable)")
            for violation in report.violations[:5]:
                print(f"  infeasible support {list(violation.support)} contains conflict {list(violation.conflict)}")
            for missing in report.missing[:5]:
                print(f"  simplex {list(missing)} is not reachable")
        write_json(reports, self.out("verify.json"))
        return {k: {"sound": r["sound"], "complete": r["complete"]} for k, r in reports.items()}

    def cmd_sths(self, args) -> Dict:
        plant = PlantConfig.from_file(args.plant)
        scenario = load_scenario_csv(args.scenario, plant)
        mesh = load_mesh(args.mesh)
        spec = SthsModelSpec.prepare(scenario, mesh, strategy=args.strategy, seed=self.config.seed)
        model = build_sths(spec)
        write_lp(model, self.out("sths.lp"))
        summary = {"periods": scenario.periods, "model": size_report(model)}
        print(f"STHS model for {scenario.periods} periods: {model!r}")

        if args.verify_periods:
            system = to_set_system(mesh)
            summary["period_checks"] = {}
            for t in range(scenario.periods):
                report = verify_formulation(extract_period_disjunction(model, t), system)
                summary["period_checks"][str(t)] = report.ok
            print(f"per-period disjunctions verified: {all(summary['period_checks'].values())}")

        if self.config.solver_cmd:
            result = solve_external(model, self.config.solver_cmd, self.config.time_limit,
                                    workdir=self.out("solver"))
            summary["solve"] = {"status": result.status, "objective": result.objective,
                                "wall_time": result.wall_time}
            if result.has_solution:
                evaluation = evaluate_schedule(result.values, scenario)
                write_json(evaluation, self.out("evaluation.json"))
                summary["evaluation"] = evaluation
                rel_err = evaluation["rel_err"]
                shown = "undefined" if rel_err is None else f"{rel_err:.3%}"
                print(f"PWL objective {evaluation['pwl_obj']:.6g}, true objective {evaluation['nl_obj']:.6g} "
                      f"(relative error {shown})")
            else:
                print(f"solver finished with status {result.status}")
        write_json(summary, self.out("sths_summary.json"))
        return summary

    def cmd_solve(self, args) -> Dict:
        model = read_lp(args.lp)
        result = solve_external(model, self.config.solver_cmd, self.config.time_limit, workdir=self.out("solver"))
        summary = result.to_dict()
        write_json(summary, self.out("solution.json"))
        print(f"{result.status}: objective {result.objective}")
        return summary

    def cmd_pipeline(self, args) -> Dict:
        partition = load_mesh(args.mesh)
        result = run_pipeline(partition, reduce=not args.no_reduce, strategy=args.strategy, seed=self.config.seed,
                              budget=self.config.enum_budget, value_rule=args.value_rule,
                              formulation=args.formulation, with_output=args.with_output)
        write_artifacts(result, self.config.out_dir)
        if args.svg and partition.dim == 2:
            write_mesh_svg(result.partition, self.out("mesh.svg"))
        summary = result.analysis
        print(f"rank {summary['rank']}, q={summary['q']}, {summary['cover_size']} bicliques -> "
              f"{self.out('model.lp')}")
        return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pwl-milp", description="PWL fitting and MILP formulations")
    parser.add_argument('--out', dest='out_dir', help='Output directory (default: $PWL_OUT_DIR or ./out)')
    parser.add_argument('--seed', type=int, help='Global random seed')
    parser.add_argument('--config', help='key=value configuration file')
    parser.add_argument('--budget', dest='enum_budget', type=int, help='Enumeration budget')
    parser.add_argument('--sample-budget', dest='sample_budget', type=int,
                        help='Active sampling cells allowed per simplex when fitting')
    parser.add_argument('--solver-cmd', dest='solver_cmd', help='Solver command template with {lp} {sol} {tl}')
    parser.add_argument('--time-limit', dest='time_limit', type=float, help='Solver time limit in seconds')
    parser.add_argument('--no-record', action='store_true', help='Do not store the run in the run registry')
    parser.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('fit', help='Fit a PWL function with a guaranteed error bound')
    source = p.add_mutually_exclusive_group(required=True)
    source.add_argument('--fn', choices=builtin_names(), help='Built-in function')
    source.add_argument('--expr', help='Expression in x and y')
    p.add_argument('--domain', type=float, nargs=4, default=[0.0, 0.0, 1.0, 1.0],
                   metavar=('XMIN', 'YMIN', 'XMAX', 'YMAX'))
    p.add_argument('--lipschitz', type=float, help='Lipschitz constant of --expr (estimated if omitted)')
    p.add_argument('--eps', type=float, required=True)
    p.add_argument('--alpha-lb', dest='alpha_lb', type=float, help='Minimum angle in degrees')
    p.add_argument('--theta', type=float)
    p.add_argument('--max-iter', dest='max_iter', type=int)
    p.add_argument('--audit', action='store_true', help='Dense-grid audit of the result')
    p.add_argument('--compare-grid', action='store_true', help='Also size an equidistant grid for eps')

    for name, help_text in (('analyze', 'Conflict, blocking and colouring statistics'),
                            ('reduce', 'Split edges to reduce the conflict rank'),
                            ('cover', 'Biclique cover of the rank-2 conflicts'),
                            ('formulate', 'Write one MILP formulation as LP'),
                            ('verify', 'Check formulations against the feasible vertex sets'),
                            ('pipeline', 'Conflicts, reduction, colouring, cover and GIB model')):
        p = sub.add_parser(name, help=help_text)
        p.add_argument('mesh', help='Mesh JSON file')
        if name in ('reduce', 'pipeline'):
            p.add_argument('--value-rule', choices=('preserve', 'evaluate'), default='preserve')
        if name == 'reduce':
            p.add_argument('--max-splits', type=int)
        if name in ('cover', 'formulate', 'pipeline'):
            p.add_argument('--strategy', choices=STRATEGIES, default='exact')
        if name == 'cover':
            p.add_argument('--k', type=int, default=4, help='Geometric iterations before exact search')
            p.add_argument('--lines', type=int, default=1000)
        if name in ('formulate', 'pipeline'):
            p.add_argument('--formulation', choices=FORMULATIONS, default='gib')
            p.add_argument('--with-output', action='store_true', help='Add x_k and fhat variables')
        if name == 'verify':
            p.add_argument('--formulation', choices=FORMULATIONS, action='append')
        if name == 'pipeline':
            p.add_argument('--no-reduce', action='store_true')
            p.add_argument('--svg', action='store_true', help='Plot the final mesh')

    p = sub.add_parser('sths', help='Short-term hydro scheduling model')
    p.add_argument('scenario', help='CSV with period, price and inflow columns')
    p.add_argument('plant', help='Plant key=value file')
    p.add_argument('mesh', help='HPF mesh JSON over the plant box')
    p.add_argument('--strategy', choices=STRATEGIES, default='exact')
    p.add_argument('--verify-periods', action='store_true')

    p = sub.add_parser('solve', help='Solve an LP file with the external solver')
    p.add_argument('lp')
    return parser


def create_cli(args: argparse.Namespace) -> PwlCli:
    """Build the runner from defaults, the config file and the given flags."""
    flags = {name: getattr(args, name, None)
             for name in ('out_dir', 'seed', 'enum_budget', 'sample_budget', 'solver_cmd', 'time_limit',
                          'alpha_lb', 'theta', 'max_iter')}
    if args.no_record:
        flags['record'] = False
    return PwlCli(CliConfig.build(args.config, **flags))


def main(argv: Optional[list] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        cli = create_cli(args)
    except PwlError as e:
        print(f"Error ({type(e).__name__}): {e}", file=sys.stderr)
        return exit_code_for(e)
    return cli.run(args)


if __name__ == "__main__":
    sys.exit(main())
