import math

import numpy as np
import pytest

from ncc_minimax.config import Config
from ncc_minimax.errors import ArgumentError, ConfigError, DiagnosticError
from ncc_minimax.estimators import Point, RegularizedOracle
from ncc_minimax.models import SchemeName, SolverConfig
from ncc_minimax.problems import ToyBilinearProblem
from ncc_minimax.theory import (check_descent, checkpoint_schedule, dual_error_bound_terms, dual_value,
                                game_stationarity, inner_min_x, omega, potential_value, primal_envelope,
                                prox_value, pvr_step_sizes, resolve_step_sizes, theory_constants,
                                zerosarah_batch, zerosarah_step_sizes)


def test_pvr_bounds_at_unit_smoothness():
    bounds = pvr_step_sizes(1.0, 0.5)
    assert bounds.gamma == pytest.approx(6.0)
    assert bounds.r == pytest.approx(2.0)
    assert bounds.eta_x == pytest.approx(0.5 / 493.5)
    assert bounds.eta_x == pytest.approx(1.0132e-3, rel=1e-4)
    om = omega(bounds.eta_x, 1.0, 2.0)
    assert bounds.omega == pytest.approx(om)
    assert bounds.eta_y == pytest.approx(min(0.5 / 70.0, 1.0 / (2.0 * (1.0 + om) ** 2)))
    assert bounds.rho == pytest.approx(2.0 / 708.0)
    assert bounds.omega_consistent
    assert bounds.sigma1 == pytest.approx(2.0) and bounds.sigma2 == pytest.approx(3.0)


def test_pvr_rho_with_full_gradients():
    assert pvr_step_sizes(1.0, 1.0, r=2.0).rho == pytest.approx(4.0 / 1308.0)


def test_bounds_shrink_as_p_drops():
    coarse, fine = pvr_step_sizes(3.0, 0.9), pvr_step_sizes(3.0, 0.1)
    assert fine.eta_x < coarse.eta_x and fine.rho < coarse.rho


def test_small_L_is_clamped_to_one():
    bounds = pvr_step_sizes(0.25, 0.5)
    assert bounds.L_clamped and bounds.L == 1.0
    assert bounds.eta_x == pytest.approx(pvr_step_sizes(1.0, 0.5).eta_x)


def test_smoothing_weight_range():
    assert pvr_step_sizes(1.0, 0.5, r=4.0).r == 4.0
    with pytest.raises(ConfigError):
        pvr_step_sizes(1.0, 0.5, r=1.5)
    with pytest.raises(ConfigError):
        pvr_step_sizes(1.0, 0.5, r=4.5)
    with pytest.raises(ConfigError):
        pvr_step_sizes(1.0, 0.0)


def test_zerosarah_constants_for_ten_thousand_components():
    bounds = zerosarah_step_sizes(1.0, 10000, a=2.0)
    assert bounds.b == 200 and not bounds.b_clamped
    assert bounds.lam == pytest.approx(0.005)
    assert bounds.gamma == pytest.approx(480.0)
    assert bounds.tau == pytest.approx(0.024)
    assert bounds.b_plus == 201
    assert 0 < bounds.eta_y <= 1.0 / (4.0 * (1.0 + bounds.omega) ** 2)


def test_zerosarah_batch_rounding_and_clamp():
    assert zerosarah_batch(100, 2.0) == (20, False)
    assert zerosarah_batch(101, 2.0) == (21, False)
    assert zerosarah_batch(4, 2.0) == (4, True)
    assert zerosarah_batch(3, 2.0) == (3, True)
    assert zerosarah_batch(16, 2.0) == (8, False)
    bounds = zerosarah_step_sizes(1.0, 4)
    assert bounds.b == 4 and bounds.b_clamped
    with pytest.raises(ConfigError):
        zerosarah_step_sizes(1.0, 100, a=1.5)
    with pytest.raises(ConfigError):
        zerosarah_step_sizes(1.0, 100, b=101)


def test_game_stationarity_on_identity_game():
    problem = ToyBilinearProblem(np.eye(2), c=1.0, bound=1.0)
    res_x, res_y = game_stationarity(problem, np.zeros(2), np.array([0.5, 0.5]), 1.0)
    assert res_x == pytest.approx(math.sqrt(0.5))
    assert res_y == pytest.approx(0.0)


def test_baseline_defaults(toy):
    L = toy.lipschitz_L
    steps = resolve_step_sizes(toy, SolverConfig(scheme=SchemeName.STOCGDA, batch_size=4))
    assert steps.eta_y == pytest.approx(1.0 / (4.0 * max(L, 1.0)))
    assert steps.eta_x == pytest.approx(steps.eta_y / 10.0)
    assert (steps.rho, steps.r, steps.batch_size) == (None, 0.0, 4)
    assert resolve_step_sizes(toy, SolverConfig(scheme=SchemeName.VR_AGDA, batch_size=4)).snapshot_period == 5
    assert resolve_step_sizes(toy, SolverConfig(scheme=SchemeName.GDA)).residual_eta == pytest.approx(1.0 / L)


def test_smoothed_defaults_follow_the_bounds(toy):
    steps = resolve_step_sizes(toy, SolverConfig(scheme=SchemeName.ZEROSARAH))
    assert steps.r == pytest.approx(2.0 * toy.lipschitz_L)
    assert steps.batch_size == zerosarah_batch(toy.n, 2.0)[0]
    assert steps.lam == pytest.approx(1.0 / steps.batch_size)
    assert (steps.eta_x, steps.eta_y, steps.rho) == (steps.bounds.eta_x, steps.bounds.eta_y, steps.bounds.rho)


def test_rho_horizon_schedule(toy):
    steps = resolve_step_sizes(toy, SolverConfig(scheme=SchemeName.PVR, T=10000, rho_horizon_scale=1.0))
    assert steps.rho == pytest.approx(min(steps.bounds.rho, 0.01))
    loose = resolve_step_sizes(toy, SolverConfig(scheme=SchemeName.PVR, T=4, rho=0.9, rho_horizon_scale=1.0))
    assert loose.rho == pytest.approx(0.5)


def test_batch_larger_than_n_is_rejected(toy):
    with pytest.raises(ConfigError):
        resolve_step_sizes(toy, SolverConfig(scheme=SchemeName.PVR, batch_size=toy.n + 1))


def test_inner_minimizer_closed_form_agrees_with_projected_gradient(toy):
    oracle = RegularizedOracle(toy, r=2.0 * toy.lipschitz_L)
    rng = np.random.default_rng(0)
    y, z = toy.set_y.sample(rng), toy.set_x.sample(rng, 1.0)
    exact = inner_min_x(oracle, y, z)
    iterative = inner_min_x(oracle, y, z, tol=1e-12, exact=False)
    assert np.allclose(exact, iterative, atol=1e-8)


def test_weak_duality_of_the_smoothed_problem(toy):
    oracle = RegularizedOracle(toy, r=2.0 * toy.lipschitz_L)
    rng = np.random.default_rng(1)
    z = toy.set_x.sample(rng, 1.0)
    prox = prox_value(oracle, z)
    assert prox.value == pytest.approx(primal_envelope(oracle, prox.x_star, z))
    for _ in range(20):
        assert dual_value(oracle, toy.set_y.sample(rng), z) <= prox.value + 1e-7
        assert prox.value <= primal_envelope(oracle, toy.set_x.sample(rng), z) + 1e-7


def test_theory_constants_of_gda_use_full_probability(toy):
    config = SolverConfig(scheme=SchemeName.GDA)
    constants = theory_constants(toy, config, resolve_step_sizes(toy, config))
    assert constants.p == 1.0
    assert constants.estimator_weight() == pytest.approx(constants.gamma / 2.0)
    with pytest.raises(ArgumentError):
        stoc = SolverConfig(scheme=SchemeName.STOCGDA)
        theory_constants(toy, stoc, resolve_step_sizes(toy, stoc))


def test_checkpoint_schedule():
    checkpoints = checkpoint_schedule(200, 10)
    assert len(checkpoints) == 10 and checkpoints[0] == 0 and checkpoints[-1] == 199
    assert checkpoint_schedule(0, 5) == [] and checkpoint_schedule(10, 0) == []


def test_descent_check_argument_validation(toy):
    with pytest.raises(ArgumentError):
        check_descent(toy, SolverConfig(scheme=SchemeName.PVR), [0], replicas=10)
    with pytest.raises(ArgumentError):
        check_descent(toy, SolverConfig(scheme=SchemeName.STOCGDA), [0], replicas=30)


@pytest.mark.slow
def test_pvr_expected_descent_on_toy():
    problem = ToyBilinearProblem.random(n=50, dim_x=5, dim_y=5, seed=0)
    report = check_descent(problem, SolverConfig(scheme=SchemeName.PVR, p=0.5), checkpoint_schedule(20, 3),
                           replicas=30)
    assert len(report.checkpoints) == 3
    assert report.satisfied >= math.ceil(0.9 * len(report.checkpoints))


def test_dual_error_bound_at_random_states(toy):
    config = SolverConfig(scheme=SchemeName.PVR, p=0.5)
    steps = resolve_step_sizes(toy, config)
    constants = theory_constants(toy, config, steps)
    oracle = RegularizedOracle(toy, steps.r)
    rng = np.random.default_rng(11)
    for _ in range(100):
        y, z = toy.set_y.sample(rng), toy.set_x.sample(rng)
        gap, bound = dual_error_bound_terms(toy, oracle, y, z, constants)
        assert gap <= bound + 1e-9


def test_diagnostics_refuse_oversized_problems(toy, monkeypatch):
    config = SolverConfig(scheme=SchemeName.PVR, p=0.5)
    steps = resolve_step_sizes(toy, config)
    constants = theory_constants(toy, config, steps)
    x0, y0 = toy.initial_point()
    point = Point(x0, y0, x0.copy())
    monkeypatch.setattr(Config, "DIAG_MAX_SIZE", toy.dim_x * toy.dim_y - 1)
    with pytest.raises(DiagnosticError):
        potential_value(RegularizedOracle(toy, steps.r), point, np.zeros(toy.dim_x), np.zeros(toy.dim_y), constants)
    with pytest.raises(DiagnosticError):
        check_descent(toy, config, [0], replicas=30)
