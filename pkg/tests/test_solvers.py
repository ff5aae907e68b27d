import math

import numpy as np
import pytest

from ncc_minimax.errors import ConfigError
from ncc_minimax.estimators import pvr_expected_cost, zerosarah_expected_cost
from ncc_minimax.models import Lambda0Mode, SchemeName, SolverConfig
from ncc_minimax.solvers import (RUNNERS, run_pvr_sgda, run_smoothed_gda, run_solver, run_stocgda, run_vr_agda,
                                 run_zerosarah_sgda)
from ncc_minimax.streams import rng_stream


def _max_gap(a, b):
    return max(float(np.max(np.abs(u - v))) for pa, pb in zip(a, b) for u, v in zip(pa, pb))


def test_zero_iterations_record_the_start_only(toy, explicit_config):
    result = run_pvr_sgda(toy, explicit_config(toy, SchemeName.PVR, T=0))
    assert len(result.trace) == 1
    assert result.trace[0].t == 0 and result.trace[0].oracle_count == 0
    x0, y0 = toy.initial_point()
    assert np.array_equal(result.final.x, x0) and np.array_equal(result.final.y, y0)


def test_trace_cadence_includes_the_last_iterate(toy, explicit_config):
    result = run_solver(toy, explicit_config(toy, SchemeName.GDA, T=50, trace_every=10))
    assert [record.t for record in result.trace] == [0, 10, 20, 30, 40, 50]
    assert result.best.stationarity == min(record.stationarity for record in result.trace)


def test_full_probability_pvr_is_smoothed_gda(toy, explicit_config):
    pvr = run_pvr_sgda(toy, explicit_config(toy, SchemeName.PVR, p=1.0), keep_iterates=True)
    gda = run_smoothed_gda(toy, explicit_config(toy, SchemeName.GDA), keep_iterates=True)
    assert len(pvr.iterates) == len(gda.iterates) == 31
    assert _max_gap(pvr.iterates, gda.iterates) <= 1e-8
    assert pvr.estimator.tails == 0


def test_full_batch_zerosarah_is_smoothed_gda(toy, explicit_config):
    zs = run_zerosarah_sgda(toy, explicit_config(toy, SchemeName.ZEROSARAH, batch_size=toy.n), keep_iterates=True)
    gda = run_smoothed_gda(toy, explicit_config(toy, SchemeName.GDA), keep_iterates=True)
    assert _max_gap(zs.iterates, gda.iterates) <= 1e-8


@pytest.mark.parametrize("scheme", list(SchemeName))
def test_iterates_stay_feasible(toy, explicit_config, scheme):
    overrides = {"batch_size": 4} if scheme != SchemeName.GDA else {}
    if scheme in (SchemeName.STOCGDA, SchemeName.VR_AGDA):
        overrides.update(rho=None, r=None)
    result = run_solver(toy, explicit_config(toy, scheme, T=40, **overrides), keep_iterates=True)
    for x, y, _ in result.iterates:
        assert toy.set_x.contains(x, 1e-12)
        assert toy.set_y.contains(y, 1e-9)


def test_unsmoothed_baselines_track_z_to_x(toy):
    result = run_stocgda(toy, SolverConfig(scheme=SchemeName.STOCGDA, T=10, batch_size=4), keep_iterates=True)
    assert all(np.array_equal(x, z) for x, _, z in result.iterates)
    assert result.steps.r == 0.0


def test_proximal_center_moves_by_rho(toy, explicit_config):
    result = run_smoothed_gda(toy, explicit_config(toy, SchemeName.GDA, T=5, rho=0.25), keep_iterates=True)
    for (_, _, z_prev), (x, _, z) in zip(result.iterates, result.iterates[1:]):
        assert np.allclose(z, z_prev + 0.25 * (x - z_prev))


def test_oracle_accounting(toy, explicit_config):
    pvr = run_pvr_sgda(toy, explicit_config(toy, SchemeName.PVR, T=60, p=0.3, batch_size=5))
    assert pvr.estimator.heads + pvr.estimator.tails == 60
    assert pvr.counter.total == pvr_expected_cost(pvr.estimator.heads, pvr.estimator.tails, toy.n, 5)

    for mode in Lambda0Mode:
        zs = run_zerosarah_sgda(toy, explicit_config(toy, SchemeName.ZEROSARAH, T=60, batch_size=6,
                                                     lambda0_mode=mode))
        assert zs.counter.total == zerosarah_expected_cost(60, 6, toy.n, mode)

    stoc = run_stocgda(toy, SolverConfig(scheme=SchemeName.STOCGDA, T=60, batch_size=5))
    assert stoc.counter.total == 2 * 5 * 60

    vr = run_vr_agda(toy, SolverConfig(scheme=SchemeName.VR_AGDA, T=60, batch_size=5))
    m = vr.steps.snapshot_period
    assert m == toy.n // 5
    assert vr.counter.total == 2 * toy.n * math.ceil(60 / m) + 4 * 5 * 60


def test_diagnostics_do_not_touch_the_run(toy, explicit_config):
    dense = run_pvr_sgda(toy, explicit_config(toy, SchemeName.PVR, T=40, batch_size=3, trace_every=1,
                                              estimator_errors=True))
    sparse = run_pvr_sgda(toy, explicit_config(toy, SchemeName.PVR, T=40, batch_size=3, trace_every=100))
    assert dense.counter.total == sparse.counter.total
    assert np.array_equal(dense.final.x, sparse.final.x)
    assert dense.diag_counter.total > sparse.diag_counter.total


def test_runs_are_reproducible_per_stream(toy, explicit_config):
    config = explicit_config(toy, SchemeName.ZEROSARAH, T=25, batch_size=4)
    a = run_solver(toy, config, stream=rng_stream(3, "zerosarah/seed0"))
    b = run_solver(toy, config, stream=rng_stream(3, "zerosarah/seed0"))
    c = run_solver(toy, config, stream=rng_stream(3, "zerosarah/seed1"))
    assert np.array_equal(a.final.x, b.final.x) and np.array_equal(a.final.y, b.final.y)
    assert not np.array_equal(a.final.x, c.final.x)


def test_exact_driver_has_no_estimator_error(toy, explicit_config):
    result = run_smoothed_gda(toy, explicit_config(toy, SchemeName.GDA, T=20, trace_every=5,
                                                   estimator_errors=True))
    recorded = [record for record in result.trace if record.err_x is not None]
    assert len(recorded) == 4
    assert max(record.err_x for record in recorded) <= 1e-12
    assert max(record.err_y for record in recorded) <= 1e-12


def test_potential_is_recorded_for_smoothed_runs(toy, explicit_config):
    result = run_pvr_sgda(toy, explicit_config(toy, SchemeName.PVR, T=10, trace_every=5, potential=True))
    assert all(record.phi is not None for record in result.trace[:-1])
    assert result.trace[-1].phi is None


def test_monitor_values_land_in_the_trace(toy, explicit_config):
    result = run_smoothed_gda(toy, explicit_config(toy, SchemeName.GDA, T=10),
                              monitor=lambda x, y: float(y.max()))
    assert all(0.0 < record.accuracy <= 1.0 for record in result.trace)


def test_invalid_configs_fail_before_iterating(toy, explicit_config):
    with pytest.raises(ConfigError):
        run_smoothed_gda(toy, explicit_config(toy, SchemeName.GDA, r=0.5 * toy.lipschitz_L))
    with pytest.raises(ConfigError):
        run_stocgda(toy, SolverConfig(scheme=SchemeName.STOCGDA, batch_size=toy.n + 1))
    with pytest.raises(ConfigError):
        run_pvr_sgda(toy, SolverConfig(scheme=SchemeName.GDA))


def test_runner_table_covers_every_scheme():
    assert set(RUNNERS) == set(SchemeName)


@pytest.mark.slow
@pytest.mark.parametrize("scheme, p, check_slope", [
    (SchemeName.PVR, 0.1, False),
    (SchemeName.PVR, 0.5, True),
    (SchemeName.ZEROSARAH, 0.5, True),
])
def test_theory_steps_drive_the_best_residual_down(scheme, p, check_slope):
    from ncc_minimax.problems import ToyBilinearProblem
    horizons = (100, 1000, 10000)
    seeds = range(20)
    best = np.zeros((len(seeds), len(horizons)))
    for row, seed in enumerate(seeds):
        problem = ToyBilinearProblem.random(n=100, dim_x=20, dim_y=10, c=0.5, seed=seed, bound=0.01)
        for col, T in enumerate(horizons):
            config = SolverConfig(scheme=scheme, p=p, T=T, seed=seed, trace_every=10,
                                  rho_horizon_scale=1.0, residual_eta=0.1)
            best[row, col] = run_solver(problem, config).best.stationarity

    assert int(np.sum(best[:, -1] < best[:, 0])) >= 18
    if check_slope:
        slope = np.polyfit(np.log10(horizons), np.log10(best.mean(axis=0)), 1)[0]
        assert slope <= -0.15
