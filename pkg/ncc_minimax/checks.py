"""
Monte-Carlo verification suites.

Each suite returns a JSON-able report {"suite", "quick", "passed", "checks": [...]} where every
check carries its own verdict and the numbers behind it.
"""

import copy
import itertools
import logging
import math
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import ArgumentError
from .estimators import (EstimatorState, RegularizedOracle, minibatch_update, pvr_expected_cost,
                         refresh_snapshot, svrg_update, zerosarah_expected_cost)
from .models import Lambda0Mode, SchemeName, SolverConfig
from .problems import ToyBilinearProblem
from .sets import Box, InfBall, Simplex
from .solvers import IterateState, make_driver, run_solver, smoothed_gda_step
from .streams import rng_stream
from .theory import check_descent, checkpoint_schedule, resolve_step_sizes, theory_constants

logger = logging.getLogger(__name__)

SUITES = ("projections", "estimators", "descent")


def _check(name: str, passed: bool, **details: Any) -> Dict[str, Any]:
    return {"name": name, "passed": bool(passed), **details}


def _report(suite: str, quick: bool, checks: List[Dict[str, Any]]) -> Dict[str, Any]:
    passed = all(c["passed"] for c in checks)
    logger.info(f"{'✅' if passed else '❌'} {suite} suite: "
                f"{sum(c['passed'] for c in checks)}/{len(checks)} checks passed")
    return {"suite": suite, "quick": quick, "passed": passed, "checks": checks}


# -- projections ---------------------------------------------------------------------------

def simplex_projection_bruteforce(p: np.ndarray) -> np.ndarray:
    """
    Euclidean projection onto the unit simplex by enumerating every support set.

    For a support S the KKT point is p_S - theta with theta = (sum p_S - 1)/|S|; the projection
    is the feasible candidate closest to p.
    """
    p = np.asarray(p, dtype=float)
    best, best_dist = None, math.inf
    for size in range(1, p.size + 1):
        for support in itertools.combinations(range(p.size), size):
            idx = list(support)
            theta = (p[idx].sum() - 1.0) / size
            candidate = np.zeros_like(p)
            candidate[idx] = p[idx] - theta
            if candidate[idx].min() < 0.0:
                continue
            dist = float(np.sum((candidate - p) ** 2))
            if dist < best_dist:
                best, best_dist = candidate, dist
    return best


def _variational_gap(feasible_set, p: np.ndarray, rng: np.random.Generator, samples: int) -> float:
    """max over sampled feasible q of <p - P(p), q - P(p)>, nonpositive for a true projection"""
    proj = feasible_set.project(p)
    return max(float((p - proj) @ (feasible_set.sample(rng) - proj)) for _ in range(samples))


def projection_suite(quick: bool = False, master_seed: int = 0) -> Dict[str, Any]:
    trials = 100 if quick else 1000
    stream = rng_stream(master_seed, "checks/projections")
    rng = stream.generator
    checks = []

    for dim in range(2, 7):
        simplex = Simplex(dim)
        errors = []
        for _ in range(trials):
            p = rng.normal(scale=2.0, size=dim)
            errors.append(float(np.max(np.abs(simplex.project(p) - simplex_projection_bruteforce(p)))))
        worst = max(errors)
        checks.append(_check(f"simplex_vs_bruteforce/dim{dim}", worst <= 1e-9, trials=trials, max_error=worst))

    sets = {"box": Box(-np.arange(1.0, 5.0), np.arange(1.0, 5.0) * 0.5),
            "infball": InfBall(2.0, 4, center=0.5),
            "simplex": Simplex(4)}
    for label, feasible_set in sets.items():
        gaps, idempotent, inside = [], 0.0, True
        for _ in range(trials // 10):
            p = rng.normal(scale=4.0, size=feasible_set.dim)
            proj = feasible_set.project(p)
            inside = inside and feasible_set.contains(proj, 1e-12)
            idempotent = max(idempotent, float(np.max(np.abs(feasible_set.project(proj) - proj))))
            gaps.append(_variational_gap(feasible_set, p, rng, 20))
        worst_gap = max(gaps)
        checks.append(_check(f"projection_properties/{label}", inside and idempotent <= 1e-12 and worst_gap <= 1e-10,
                             feasible=inside, idempotence_error=idempotent, variational_gap=worst_gap))
    return _report("projections", quick, checks)


# -- estimator recursions --------------------------------------------------------------------

def _toy(n: int = 50, dim: int = 5, seed: int = 0) -> ToyBilinearProblem:
    return ToyBilinearProblem.random(n, dim, dim, seed=seed)


def _check_config(scheme: SchemeName, problem: ToyBilinearProblem, **overrides) -> SolverConfig:
    # step sizes well above the theory bounds so the iterates actually move between checkpoints
    L = problem.lipschitz_L
    params = dict(scheme=scheme, eta_x=0.05 / L, eta_y=0.05 / L, rho=0.1, r=2.0 * L, p=0.3, trace_every=10 ** 6)
    params.update(overrides)
    return SolverConfig(**params)


def _fixed_states(problem, config: SolverConfig, starts: Sequence[int], master_seed: int):
    """Run one trajectory and snapshot (iterate, estimator memory, v_t, w_t) at each start"""
    steps = resolve_step_sizes(problem, config)
    oracle = RegularizedOracle(problem, steps.r)
    driver = make_driver(oracle, config, steps, rng_stream(master_seed, f"checks/{config.display_label}/trajectory"))
    x0, y0 = problem.initial_point()
    state = IterateState(x0, y0, x0.copy())
    driver.start(state.point)
    snapshots = []
    for t in range(max(starts) + 1):
        v, w = driver.estimate(t, state.point)
        if t in starts:
            snapshots.append((state, copy.deepcopy(driver.state), v.copy(), w.copy()))
        state = smoothed_gda_step(state, problem, steps, v, w)
    return steps, snapshots


def _mc_upper(samples: np.ndarray, bound: float) -> Tuple[bool, float, float]:
    mean = float(samples.mean())
    stderr = float(samples.std(ddof=1) / math.sqrt(samples.size))
    return mean - 3.0 * stderr <= bound * (1.0 + 1e-9) + 1e-14, mean, stderr


def _unbiased(samples: np.ndarray, target: np.ndarray) -> Tuple[bool, float, float]:
    """||mean - target||^2 against nine times its expectation sum(var)/N"""
    gap = float(np.sum((samples.mean(axis=0) - target) ** 2))
    scale = float(samples.var(axis=0, ddof=1).sum() / samples.shape[0])
    return gap <= 9.0 * scale + 1e-24, gap, scale


def _recursion_checks(problem, config: SolverConfig, starts: Sequence[int], draws: int,
                      master_seed: int) -> List[Dict[str, Any]]:
    steps, snapshots = _fixed_states(problem, config, starts, master_seed)
    oracle = RegularizedOracle(problem, steps.r)
    L, r = steps.L, steps.r
    zerosarah = config.scheme == SchemeName.ZEROSARAH
    constants = theory_constants(problem, config, steps) if zerosarah else None
    label = config.display_label
    checks = []

    for state, memory, v, w in snapshots:
        t = state.t
        nxt = smoothed_gda_step(state, problem, steps, v, w)
        dx2 = float(np.sum((nxt.x - state.x) ** 2))
        dy2 = float(np.sum((nxt.y - state.y) ** 2))
        dz2 = float(np.sum((nxt.z - state.z) ** 2))
        gx_t, gy_t = oracle.full_grads(state.point)
        gx_1, gy_1 = oracle.full_grads(nxt.point)
        ex, ey = float(np.sum((gx_t - v) ** 2)), float(np.sum((gy_t - w) ** 2))
        moves_x = (L + r) ** 2 * dx2 + L ** 2 * dy2 + r ** 2 * dz2
        moves_y = L ** 2 * (dx2 + dy2)

        template = make_driver(oracle, config, steps, rng_stream(master_seed, f"checks/{label}/t{t}"))
        template.state = memory
        if zerosarah:
            cx_t, cy_t = oracle.component_grads(problem.all_indices, state.point)
            cx_1, cy_1 = oracle.component_grads(problem.all_indices, nxt.point)
            mse_x, mse_y = memory.d.mse(cx_t), memory.h.mse(cy_t)

        err_x, err_y = np.empty(draws), np.empty(draws)
        track_x, track_y = np.empty(draws), np.empty(draws)
        v_draws = np.empty((draws, problem.dim_x))
        for k in range(draws):
            fork = template.fork(template.stream, oracle)
            v1, w1 = fork.estimate(t + 1, nxt.point)
            v_draws[k] = v1
            err_x[k] = np.sum((gx_1 - v1) ** 2)
            err_y[k] = np.sum((gy_1 - w1) ** 2)
            if zerosarah:
                track_x[k] = fork.state.d.mse(cx_1)
                track_y[k] = fork.state.h.mse(cy_1)

        if zerosarah:
            lam, b = steps.lam, steps.batch_size
            bounds = {
                "v_error": (err_x, (1 - lam) * ex + 2 * lam ** 2 / b * mse_x + 6.0 / b * moves_x),
                "w_error": (err_y, (1 - lam) * ey + 2 * lam ** 2 / b * mse_y + 4.0 / b * moves_y),
                "x_trackers": (track_x, constants.zeta * mse_x + 3 * constants.xi * moves_x),
                "y_trackers": (track_y, constants.zeta * mse_y + 2 * constants.xi * moves_y),
            }
        else:
            p = config.p
            bounds = {
                "v_error": (err_x, (1 - p) * ex + 3 * (1 - p) * moves_x),
                "w_error": (err_y, (1 - p) * ey + 2 * (1 - p) * moves_y),
            }
            # tails keep the SARAH difference, heads reset to the full gradient
            mean_v = p * gx_1 + (1 - p) * (v + gx_1 - gx_t)
            ok, gap, scale = _unbiased(v_draws, mean_v)
            checks.append(_check(f"{label}/conditional_mean/t{t}", ok, draws=draws, sq_gap=gap, sq_scale=scale))

        for name, (samples, bound) in bounds.items():
            ok, mean, stderr = _mc_upper(samples, bound)
            checks.append(_check(f"{label}/{name}/t{t}", ok, draws=draws, mean=mean, stderr=stderr, bound=bound))
    return checks


def _unbiasedness_checks(problem, starts: Sequence[int], draws: int, master_seed: int) -> List[Dict[str, Any]]:
    """Minibatch and SVRG estimators average to the full gradient of f"""
    config = _check_config(SchemeName.PVR, problem, p=1.0)
    steps, snapshots = _fixed_states(problem, config, starts, master_seed)
    oracle = RegularizedOracle(problem, 0.0)
    stream = rng_stream(master_seed, "checks/unbiased")
    x0, y0 = problem.initial_point()
    svrg = EstimatorState()
    refresh_snapshot(svrg, oracle, IterateState(x0, y0, x0.copy()).point)
    checks = []
    for state, _, _, _ in snapshots:
        point = state.point
        gx, gy = oracle.full_grads(point)
        mini = np.empty((draws, problem.dim_x + problem.dim_y))
        reduced = np.empty_like(mini)
        for k in range(draws):
            batch = stream.sample_batch(problem.n, 2)
            mini[k] = np.concatenate(minibatch_update(oracle, batch, point))
            reduced[k] = np.concatenate(svrg_update(svrg, oracle, batch, point))
        target = np.concatenate([gx, gy])
        for name, samples in (("minibatch", mini), ("svrg", reduced)):
            ok, gap, scale = _unbiased(samples, target)
            checks.append(_check(f"{name}/unbiased/t{state.t}", ok, draws=draws, sq_gap=gap, sq_scale=scale))
    return checks


def _drift_check(problem, iterations: int, master_seed: int) -> Dict[str, Any]:
    config = _check_config(SchemeName.ZEROSARAH, problem, resum_every=10 ** 9)
    steps = resolve_step_sizes(problem, config)
    driver = make_driver(RegularizedOracle(problem, steps.r), config, steps, rng_stream(master_seed, "checks/drift"))
    x0, y0 = problem.initial_point()
    state = IterateState(x0, y0, x0.copy())
    driver.start(state.point)
    for t in range(iterations):
        v, w = driver.estimate(t, state.point)
        state = smoothed_gda_step(state, problem, steps, v, w)
    drift = max(driver.state.d.drift(), driver.state.h.drift())
    return _check("zerosarah/tracker_drift", drift <= 1e-9, iterations=iterations, relative_drift=drift)


def _accounting_checks(problem, T: int, master_seed: int) -> List[Dict[str, Any]]:
    checks = []
    zero_init = {"lambda0_mode": Lambda0Mode.ZERO_INIT, "label": "zerosarah-zero-init"}
    for scheme, extra in ((SchemeName.PVR, {}), (SchemeName.ZEROSARAH, {}), (SchemeName.ZEROSARAH, zero_init)):
        config = SolverConfig(scheme=scheme, T=T, seed=master_seed, trace_every=T + 1, **extra)
        result = run_solver(problem, config, record_wall=False)
        b = result.steps.batch_size
        if scheme == SchemeName.PVR:
            expected = pvr_expected_cost(result.estimator.heads, result.estimator.tails, problem.n, b)
        else:
            expected = zerosarah_expected_cost(T, b, problem.n, config.lambda0_mode)
        checks.append(_check(f"{config.display_label}/oracle_accounting", result.counter.total == expected,
                             counted=result.counter.total, expected=expected))
    return checks


def estimator_suite(quick: bool = False, master_seed: int = 0) -> Dict[str, Any]:
    draws = 2000 if quick else 100000
    starts = (3, 10) if quick else (3, 10, 25, 50, 100)
    problem = _toy()
    checks = []
    for scheme in (SchemeName.PVR, SchemeName.ZEROSARAH):
        config = _check_config(scheme, problem)
        checks.extend(_recursion_checks(problem, config, starts, draws, master_seed))
    checks.extend(_unbiasedness_checks(problem, starts, draws // 10, master_seed))
    checks.append(_drift_check(problem, 1000 if quick else 10000, master_seed))
    checks.extend(_accounting_checks(problem, 50 if quick else 500, master_seed))
    return _report("estimators", quick, checks)


# -- potential descent ---------------------------------------------------------------------

def descent_suite(quick: bool = False, master_seed: int = 0, workers: int = 1) -> Dict[str, Any]:
    replicas = 30 if quick else 100
    checkpoints = checkpoint_schedule(20 if quick else 200, 3 if quick else 10)
    problem = _toy()
    checks = []
    for scheme in (SchemeName.PVR, SchemeName.ZEROSARAH):
        config = SolverConfig(scheme=scheme, p=0.5)
        report = check_descent(problem, config, checkpoints, replicas=replicas, master_seed=master_seed, workers=workers)
        needed = math.ceil(0.9 * len(report.checkpoints))
        checks.append(_check(f"{scheme.value}/expected_descent", report.satisfied >= needed,
                             satisfied=report.satisfied, checkpoints=len(report.checkpoints),
                             report=report.model_dump(mode='json')))
    return _report("descent", quick, checks)


_RUNNERS: Dict[str, Callable[..., Dict[str, Any]]] = {
    "projections": projection_suite,
    "estimators": estimator_suite,
    "descent": descent_suite,
}


def run_suite(name: str, quick: bool = False, master_seed: int = 0, workers: Optional[int] = None) -> Dict[str, Any]:
    if name not in _RUNNERS:
        raise ArgumentError(f"unknown suite {name!r}, expected one of {', '.join(SUITES)}")
    kwargs = {"workers": workers} if name == "descent" and workers else {}
    return _RUNNERS[name](quick=quick, master_seed=master_seed, **kwargs)
