import math

import numpy as np
import pytest

from ncc_minimax.checks import simplex_projection_bruteforce
from ncc_minimax.errors import ArgumentError
from ncc_minimax.sets import Box, InfBall, Simplex, stationarity_residual


def test_box_projection_clips_each_coordinate():
    box = Box([-1.0, 0.0], [1.0, 2.0])
    assert np.array_equal(box.project(np.array([-3.0, 1.5])), np.array([-1.0, 1.5]))
    assert np.array_equal(box.project(np.array([0.5, 5.0])), np.array([0.5, 2.0]))


def test_feasible_points_are_returned_unchanged():
    box = Box.symmetric(1.0, 3)
    p = np.array([0.1, -0.9, 1.0])
    assert np.array_equal(box.project(p), p)
    simplex = Simplex(3)
    q = np.array([0.2, 0.3, 0.5])
    assert np.array_equal(simplex.project(q), q)


def test_simplex_projection_known_values():
    simplex = Simplex(3)
    assert np.allclose(simplex.project(np.array([2.0, 0.0, 0.0])), [1.0, 0.0, 0.0])
    assert np.allclose(simplex.project(np.array([0.3, 0.3, 0.3])), [1 / 3, 1 / 3, 1 / 3])
    assert np.allclose(simplex.project(np.array([1.0, 1.0, -5.0])), [0.5, 0.5, 0.0])


def test_simplex_projection_matches_support_enumeration():
    rng = np.random.default_rng(3)
    for dim in (2, 4, 6):
        simplex = Simplex(dim)
        for _ in range(50):
            p = rng.normal(scale=3.0, size=dim)
            proj = simplex.project(p)
            assert simplex.contains(proj, 1e-12)
            assert np.max(np.abs(proj - simplex_projection_bruteforce(p))) <= 1e-9


def test_projections_are_idempotent():
    rng = np.random.default_rng(1)
    for feasible_set in (Box.symmetric(0.5, 5), InfBall(2.0, 5, center=1.0), Simplex(5)):
        for _ in range(20):
            proj = feasible_set.project(rng.normal(scale=5.0, size=5))
            assert np.array_equal(feasible_set.project(proj), proj)


def test_diameters():
    assert Box.symmetric(1.0, 4).diameter() == pytest.approx(4.0)
    assert InfBall(2.0, 4).diameter() == pytest.approx(8.0)
    assert Simplex(5).diameter() == pytest.approx(math.sqrt(2.0))
    assert Simplex(1).diameter() == 0.0


def test_linear_maximizer():
    assert np.array_equal(Box.symmetric(1.0, 3).linear_maximizer(np.array([2.0, -1.0, 0.0])), [1.0, -1.0, -1.0])
    assert np.array_equal(Simplex(3).linear_maximizer(np.array([0.1, 0.7, 0.2])), [0.0, 1.0, 0.0])


def test_invalid_sets_and_inputs():
    with pytest.raises(ArgumentError):
        Box([1.0], [0.0])
    with pytest.raises(ArgumentError):
        Box([-np.inf], [0.0])
    with pytest.raises(ArgumentError):
        InfBall(0.0, 3)
    with pytest.raises(ArgumentError):
        Simplex(0)
    with pytest.raises(ArgumentError):
        Simplex(3).project(np.zeros(4))


def test_stationarity_residual_on_box():
    box = Box.symmetric(1.0, 2)
    assert stationarity_residual(box, np.zeros(2), np.array([1.0, 0.0]), 1.0) == pytest.approx(1.0)
    # gradient pointing out of the set at an active bound
    assert stationarity_residual(box, np.array([1.0, 0.0]), np.array([-1.0, 0.0]), 1.0) == pytest.approx(0.0)
    assert stationarity_residual(box, np.array([1.0, 0.0]), np.array([-1.0, 0.0]), 1.0, exact=True) == 0.0
    assert stationarity_residual(box, np.array([1.0, 0.0]), np.array([0.5, 0.2]), 1.0, exact=True) \
        == pytest.approx(math.hypot(0.5, 0.2))


def test_stationarity_residual_rejects_bad_arguments():
    with pytest.raises(ArgumentError):
        stationarity_residual(Simplex(2), np.array([0.5, 0.5]), np.zeros(2), 1.0, exact=True)
    with pytest.raises(ArgumentError):
        stationarity_residual(Box.symmetric(1.0, 2), np.zeros(2), np.zeros(2), 0.0)


@pytest.mark.parametrize("feasible_set", [
    Box([-1.0, 0.0, 2.0], [1.0, 0.5, 3.0]),
    InfBall(2.0, 4),
    Simplex(5),
])
def test_projections_are_non_expansive(feasible_set):
    rng = np.random.default_rng(4)
    for _ in range(200):
        a, b = rng.normal(scale=3.0, size=(2, feasible_set.dim))
        gap = np.linalg.norm(feasible_set.project(a) - feasible_set.project(b))
        assert gap <= np.linalg.norm(a - b) + 1e-12


def test_projected_residual_approaches_the_normal_cone_distance():
    box = Box.symmetric(1.0, 4)
    # lower bound, upper bound, interior, and a point 1e-3 short of the upper bound
    p = np.array([-1.0, 1.0, 0.2, 0.999])
    g = np.array([-2.0, 0.7, 1.5, -1.0])
    exact = stationarity_residual(box, p, g, 1.0, exact=True)
    gaps = [abs(stationarity_residual(box, p, g, eta) - exact) for eta in (1e-2, 1e-4, 1e-6)]
    tol = 1e-6 * np.linalg.norm(g)
    assert gaps[0] > 0.1
    assert all(later <= earlier + tol for earlier, later in zip(gaps, gaps[1:]))
    assert gaps[-1] <= tol
