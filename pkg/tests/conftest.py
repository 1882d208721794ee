import os

import numpy as np
import pytest

from src.delaunay import delaunay
from src.mesh import load_mesh, partition_from_triangulation
from src.milp import DisjunctionSpec
from src.pipeline import run_pipeline
from src.sths import PlantConfig, Scenario

DATA_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "data")
GOLDEN_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "golden")


def pytest_collection_modifyitems(config, items):
    """Skip tests marked 'solver' unless an external solver is configured."""
    if os.getenv("PWL_SOLVER_CMD"):
        return
    skip = pytest.mark.skip(reason="PWL_SOLVER_CMD is not set")
    for item in items:
        if "solver" in item.keywords:
            item.add_marker(skip)


@pytest.fixture
def data_dir():
    return DATA_DIR


@pytest.fixture
def golden():
    """Read a golden file by name."""
    def _read(name):
        with open(os.path.join(GOLDEN_DIR, name)) as fh:
            return fh.read()
    return _read


@pytest.fixture
def b3_partition():
    """Vertices u, v1, v2, v3, w; triangles (u,v1,v2), (u,v1,v3), (u,v2,v3), (v1,v2,w)."""
    return load_mesh(os.path.join(DATA_DIR, "b3_example.json"))


@pytest.fixture
def toy_mesh():
    return load_mesh(os.path.join(DATA_DIR, "sths_toy_mesh.json"))


@pytest.fixture
def toy_plant():
    return PlantConfig.from_file(os.path.join(DATA_DIR, "plant_toy.cfg"))


@pytest.fixture
def toy_scenario(toy_plant):
    """One period: price 50, inflow 1."""
    return Scenario(price=[50.0], inflow=[1.0], plant=toy_plant)


@pytest.fixture
def make_mesh():
    """Random Delaunay mesh of the unit square with n interior points."""
    def _make(seed, n=8, f=None):
        rng = np.random.default_rng(seed)
        corners = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]
        interior = [tuple(p) for p in 0.05 + 0.9 * rng.random((n, 2))]
        tri = delaunay(corners + interior)
        pts = tri.point_array()
        values = f(pts[:, 0], pts[:, 1]) if f is not None else pts[:, 0] + pts[:, 1]
        return partition_from_triangulation(tri, values, provenance=f"random seed={seed}")
    return _make


@pytest.fixture
def b3_result(b3_partition):
    """Pipeline result for the five-vertex mesh without rank reduction (rank 3, q = 3, one biclique)."""
    return run_pipeline(b3_partition, reduce=False)


@pytest.fixture
def b3_spec(b3_partition, b3_result):
    return DisjunctionSpec.from_partition(b3_partition, b3_result.cover, b3_result.coloring, b3_result.hypergraph)
