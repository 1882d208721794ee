import math

import numpy as np
import pytest

from src.errors import Degenerate
from src.geometry import (barycentric_coordinates, circumcenter, face_distance_min, is_degenerate, min_angle,
                          simplex_metrics, simplex_volume, triangle_angles)
from src.predicates import in_diametral_circle, incircle, incircle_exact, orientation, orientation_exact


class TestPredicates:
    def test_orientation_signs(self):
        assert orientation((0, 0), (1, 0), (0, 1)) == 1
        assert orientation((0, 0), (0, 1), (1, 0)) == -1
        assert orientation((0, 0), (1, 1), (2, 2)) == 0

    def test_orientation_near_collinear_matches_exact(self):
        # Points a few ulps off the line y = x
        a = (0.5, 0.5)
        b = (12.0, 12.0)
        for k in range(-3, 4):
            c = (24.0, math.nextafter(24.0, 24.0 + k) if k else 24.0)
            assert orientation(a, b, c) == orientation_exact(a, b, c)

    def test_incircle_signs(self):
        a, b, c = (0, 0), (1, 0), (0, 1)
        assert incircle(a, b, c, (0.5, 0.5)) == 1
        assert incircle(a, b, c, (2, 2)) == -1
        assert incircle(a, b, c, (1, 1)) == 0

    def test_incircle_cocircular_is_exact_zero(self):
        # Four corners of a square are cocircular
        assert incircle((0.1, 0.1), (0.7, 0.1), (0.7, 0.7), (0.1, 0.7)) == 0
        assert incircle_exact((0.1, 0.1), (0.7, 0.1), (0.7, 0.7), (0.1, 0.7)) == 0

    def test_in_diametral_circle(self):
        assert in_diametral_circle((0, 0), (2, 0), (1, 0.5))
        assert not in_diametral_circle((0, 0), (2, 0), (1, 1))  # on the circle
        assert not in_diametral_circle((0, 0), (2, 0), (3, 0))


def test_simplex_volume_2d_and_3d():
    assert simplex_volume(np.array([[0, 0], [1, 0], [0, 1]])) == pytest.approx(0.5)
    assert simplex_volume(np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]])) == pytest.approx(1 / 6)


def test_is_degenerate():
    assert is_degenerate(np.array([[0, 0], [1, 1], [2, 2]]))
    assert not is_degenerate(np.array([[0, 0], [1, 0], [0, 1]]))


def test_triangle_angles_sum_to_180():
    angles = triangle_angles((0, 0), (3, 0), (1, 2))
    assert sum(angles) == pytest.approx(180.0)
    assert min_angle((0, 0), (1, 0), (0, 1)) == pytest.approx(45.0)


def test_circumcenter():
    assert circumcenter((0, 0), (2, 0), (0, 2)) == pytest.approx((1.0, 1.0))


def test_circumcenter_collinear_raises():
    with pytest.raises(Degenerate):
        circumcenter((0, 0), (1, 1), (2, 2))


def test_barycentric_coordinates():
    coords = np.array([[0, 0], [1, 0], [0, 1]])
    lam = barycentric_coordinates(coords, np.array([[0.25, 0.25], [1.0, 0.0]]))
    assert lam[0] == pytest.approx([0.5, 0.25, 0.25])
    assert lam[1] == pytest.approx([0.0, 1.0, 0.0])


def test_face_distance_min_is_smallest_altitude_in_2d():
    coords = np.array([[0, 0], [4, 0], [0, 1]], dtype=float)
    # altitudes: 1 onto the x-axis, 4 onto the y-axis, 4/sqrt(17) onto the hypotenuse
    assert face_distance_min(coords) == pytest.approx(min(1.0, 4.0, 4 / math.hypot(4, 1)))


def test_face_distance_min_regular_tetrahedron():
    coords = np.array([[0, 0, 0], [1, 1, 0], [1, 0, 1], [0, 1, 1]], dtype=float)
    # opposite edges are 1 apart, a vertex is 2/sqrt(3) from its face
    assert face_distance_min(coords) == pytest.approx(1.0)


def test_simplex_metrics():
    metrics = simplex_metrics((0, 1, 2), np.array([[0, 0], [1, 0], [0, 1]], dtype=float))
    assert metrics.ell_max == pytest.approx(math.sqrt(2))
    assert metrics.volume == pytest.approx(0.5)
    assert metrics.alpha_min == pytest.approx(45.0)
    assert metrics.delta_min == pytest.approx(math.sqrt(2) / 2)
