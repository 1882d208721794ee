from unittest.mock import patch

import numpy as np
import pytest
from scipy.spatial.distance import pdist

from src.errors import RefinementLimit, SizeLimit, ValidationError
from src.sampling import covering_radius, mps_sample, simplex_grid, simplex_rng

TRIANGLE = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]])
TETRA = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])


@pytest.mark.parametrize("r", [0.2, 0.08])
def test_samples_cover_the_triangle(r):
    samples = mps_sample((0, 1, 2), TRIANGLE, r_cover=r, seed=3)
    assert covering_radius(TRIANGLE, samples.points, step=r / 10) <= r


def test_samples_are_separated_and_inside():
    samples = mps_sample((0, 1, 2), TRIANGLE, r_cover=0.1, seed=5)
    assert pdist(samples.points).min() > samples.r_min
    lam = np.linalg.solve(np.vstack([TRIANGLE.T, np.ones(3)]),
                          np.vstack([samples.points.T, np.ones(len(samples))]))
    assert lam.min() >= -1e-12


def test_tetrahedron_is_covered():
    samples = mps_sample((0, 1, 2, 3), TETRA, r_cover=0.3, seed=1)
    assert covering_radius(TETRA, samples.points, step=0.05) <= 0.3


def test_same_seed_same_samples():
    a = mps_sample((0, 1, 2), TRIANGLE, r_cover=0.1, seed=11)
    b = mps_sample((0, 1, 2), TRIANGLE, r_cover=0.1, seed=11)
    np.testing.assert_array_equal(a.points, b.points)


def test_generator_depends_on_vertex_set_not_order():
    assert simplex_rng(4, (2, 0, 1)).random() == simplex_rng(4, (0, 1, 2)).random()
    assert simplex_rng(4, (0, 1, 2)).random() != simplex_rng(4, (0, 1, 3)).random()


def test_sample_set_metadata():
    samples = mps_sample((0, 1, 2), TRIANGLE, r_cover=0.2, simplex_id=7)
    assert samples.simplex_id == 7
    assert samples.radius == 0.2
    assert samples.r_min == pytest.approx(0.1)
    assert len(samples) > 0


@pytest.mark.parametrize("r_cover, r_min", [(0.0, None), (0.1, 0.1), (0.1, -1.0)])
def test_invalid_radii(r_cover, r_min):
    with pytest.raises(ValidationError):
        mps_sample((0, 1, 2), TRIANGLE, r_cover=r_cover, r_min=r_min)


def test_simplex_grid_includes_vertices():
    nodes = simplex_grid(TRIANGLE, 0.25)
    np.testing.assert_array_equal(nodes[:3], TRIANGLE)
    assert len(nodes) > 3


@pytest.mark.slow
def test_coverage_over_many_seeds():
    for seed in range(20):
        samples = mps_sample((0, 1, 2), TRIANGLE, r_cover=0.05, seed=seed)
        assert covering_radius(TRIANGLE, samples.points, step=0.005) <= 0.05


class TestCellBudget:
    def test_tiny_radius_raises_before_allocating(self):
        with pytest.raises(SizeLimit, match="budget"):
            mps_sample((0, 1, 2), TRIANGLE, r_cover=0.5 * 0.001 / 3)

    def test_explicit_budget(self):
        with pytest.raises(SizeLimit):
            mps_sample((0, 1, 2), TRIANGLE, r_cover=0.1, budget=10)

    def test_budget_must_be_positive(self):
        with pytest.raises(ValidationError):
            mps_sample((0, 1, 2), TRIANGLE, r_cover=0.1, budget=0)

    def test_chunked_scan_gives_the_same_samples(self):
        whole = mps_sample((0, 1, 2), TRIANGLE, r_cover=0.05, seed=4)
        with patch("src.sampling.SCAN_CHUNK", 7):
            chunked = mps_sample((0, 1, 2), TRIANGLE, r_cover=0.05, seed=4)
        np.testing.assert_array_equal(whole.points, chunked.points)


def test_depth_cap_raises():
    with patch("src.sampling.MAX_DEPTH", -1):
        with pytest.raises(RefinementLimit, match="uncovered"):
            mps_sample((0, 1, 2), TRIANGLE, r_cover=0.1, seed=1)
