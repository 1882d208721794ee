"""Mesh to MILP: conflict analysis, rank reduction, colouring, biclique cover and the formulation."""

import json
import logging
import os
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np

from src.biclique import cover_bicliques, conflict_graph
from src.blocking import build_blocking_hypergraph, color_blocking
from src.conflict import DEFAULT_BUDGET, conflict_hypergraph, reduce_rank
from src.errors import IoError
from src.lp_format import write_lp
from src.mesh import save_mesh, to_set_system
from src.milp import DisjunctionSpec, build_formulation
from src.models.biclique import BicliqueCover
from src.models.coloring import BlockingHypergraph, Coloring
from src.models.hypergraph import ConflictHypergraph, SplitRecord
from src.models.milp_model import MilpModel, size_report
from src.models.partition import SimplicialPartition

log = logging.getLogger(__name__)


@dataclass
class PipelineResult:
    partition: SimplicialPartition
    hypergraph: ConflictHypergraph
    splits: List[SplitRecord] = field(default_factory=list)
    blocking: Optional[BlockingHypergraph] = None
    coloring: Optional[Coloring] = None
    cover: BicliqueCover = field(default_factory=BicliqueCover)
    model: Optional[MilpModel] = None

    @property
    def analysis(self) -> Dict:
        return analysis_summary(self)


def analysis_summary(result: PipelineResult) -> Dict:
    """Sizes of every stage; q and beta are 0 when no colouring was needed."""
    hg = result.hypergraph
    counts = hg.counts_by_size()
    summary = {
        "num_vertices": result.partition.num_vertices,
        "num_simplices": result.partition.num_simplices,
        "dim": result.partition.dim,
        "rank": hg.rank,
        "nu": counts.get(2, 0),
        "mu": sum(n for k, n in counts.items() if k >= 3),
        "conflicts_by_size": {str(k): n for k, n in counts.items()},
        "splits": len(result.splits),
        "beta": len(result.blocking.edges) if result.blocking is not None else 0,
        "q": result.coloring.q if result.coloring is not None else 0,
        "cover_size": len(result.cover),
        "conflict_graph_edges": result.cover.num_host_edges,
    }
    if result.model is not None:
        summary["model"] = size_report(result.model)
    return summary


def analyze(partition: SimplicialPartition, budget: int = DEFAULT_BUDGET) -> PipelineResult:
    """Conflict hypergraph plus, for rank >= 3, the blocking hypergraph and its colouring."""
    hg = conflict_hypergraph(partition, budget)
    result = PipelineResult(partition, hg)
    if hg.rank > 2:
        result.blocking = build_blocking_hypergraph(to_set_system(partition), hg, partition.dim, budget)
        result.coloring = color_blocking(result.blocking, partition.simplices)
    return result


def run_pipeline(partition: SimplicialPartition, reduce: bool = True, strategy: str = "exact",
                 seed: Optional[int] = None, budget: int = DEFAULT_BUDGET, value_rule: str = "preserve",
                 oracle: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 formulation: str = "gib", with_output: bool = False) -> PipelineResult:
    splits: List[SplitRecord] = []
    if reduce:
        partition, splits = reduce_rank(partition, value_rule, oracle, budget)
    result = analyze(partition, budget)
    result.splits = splits
    result.cover = cover_bicliques(conflict_graph(result.hypergraph), strategy=strategy, seed=seed,
                                   partition=partition if strategy != "exact" else None)
    spec = DisjunctionSpec.from_partition(partition, result.cover, result.coloring, result.hypergraph)
    result.model = build_formulation(spec, formulation, with_output=with_output)
    log.info("pipeline: rank %d, %d splits, q=%d, %d bicliques, %r", result.hypergraph.rank, len(splits),
             result.coloring.q if result.coloring else 0, len(result.cover), result.model)
    return result


def write_json(data, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(data, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as e:
        raise IoError(f"cannot write {path}: {e}") from e


def write_artifacts(result: PipelineResult, out_dir) -> Dict[str, str]:
    """model.lp, analysis.json and cover.json, plus mesh.json when the mesh was changed by splits."""
    os.makedirs(out_dir, exist_ok=True)
    paths = {"analysis": os.path.join(out_dir, "analysis.json"),
             "cover": os.path.join(out_dir, "cover.json")}
    write_json(result.analysis, paths["analysis"])
    write_json(result.cover.to_dict(), paths["cover"])
    if result.model is not None:
        paths["model"] = os.path.join(out_dir, "model.lp")
        write_lp(result.model, paths["model"])
    if result.splits:
        paths["mesh"] = os.path.join(out_dir, "mesh.json")
        save_mesh(result.partition, paths["mesh"])
    return paths
