"""
Single-loop smoothed gradient descent-ascent.

Every smoothed solver iterates

    x <- P_X(x - eta_x v_t),   y <- P_Y(y + eta_y w_t),   z <- z + rho (x_new - z)

with (v_t, w_t) supplied by an estimator driver. StocGDA runs the same loop on f (r = 0,
z tracks x); VR-AGDA alternates an x-step and a y-step at the fresh x with SVRG estimators.
"""

import copy
import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .errors import ConfigError, DiagnosticError
from .estimators import (EstimatorState, OracleCounter, Point, RegularizedOracle, init_zerosarah,
                         minibatch_update, pvr_update, refresh_snapshot, svrg_update, zerosarah_update)
from .models import BatchCoupling, Lambda0Mode, SchemeName, SolverConfig, TraceRecord
from .problems import MinimaxProblem
from .streams import RandomStream, rng_stream
from .theory import (ResolvedSteps, diagnostics_allowed, game_stationarity, potential_value,
                     resolve_step_sizes, theory_constants)

logger = logging.getLogger(__name__)

# monitor(x, y) -> extra metric recorded as TraceRecord.accuracy
Monitor = Callable[[np.ndarray, np.ndarray], Optional[float]]


@dataclass
class IterateState:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    t: int = 0

    @property
    def point(self) -> Point:
        return Point(self.x, self.y, self.z)


@dataclass
class SolverResult:
    scheme: SchemeName
    trace: List[TraceRecord]
    final: IterateState
    best: TraceRecord
    best_point: Tuple[np.ndarray, np.ndarray]
    counter: OracleCounter
    diag_counter: OracleCounter
    steps: ResolvedSteps
    estimator: EstimatorState
    iterates: Optional[List[Tuple[np.ndarray, np.ndarray, np.ndarray]]] = None
    wall_seconds: float = 0.0
    defaults: Dict = field(default_factory=dict)


def smoothed_gda_step(state: IterateState, problem: MinimaxProblem, steps: ResolvedSteps,
                      v: np.ndarray, w: np.ndarray) -> IterateState:
    """One projected descent-ascent step followed by the proximal-center move"""
    x_new = problem.set_x.project(state.x - steps.eta_x * v)
    y_new = problem.set_y.project(state.y + steps.eta_y * w)
    if steps.rho is None:
        z_new = x_new.copy()
    else:
        z_new = state.z + steps.rho * (x_new - state.z)
    return IterateState(x_new, y_new, z_new, state.t + 1)


# -- estimator drivers ---------------------------------------------------------------------

class EstimatorDriver:
    """Draws randomness for one scheme and turns it into (v_t, w_t)"""

    def __init__(self, oracle: RegularizedOracle, config: SolverConfig, steps: ResolvedSteps,
                 stream: RandomStream):
        self.oracle = oracle
        self.config = config
        self.steps = steps
        self.stream = stream
        self.state = EstimatorState()

    @property
    def coupled(self) -> bool:
        return self.config.coupling == BatchCoupling.COUPLED

    def _batches(self, b: int) -> Tuple[np.ndarray, Optional[np.ndarray]]:
        n = self.oracle.n
        batch = self.stream.sample_batch(n, b)
        return batch, (None if self.coupled else self.stream.sample_batch(n, b))

    def start(self, point: Point) -> None:
        self.state.prev = point

    def estimate(self, t: int, point: Point) -> Tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def fork(self, stream: RandomStream, oracle: RegularizedOracle) -> 'EstimatorDriver':
        """Independent copy of the estimator memory drawing from another stream"""
        clone = self.__class__(oracle, self.config, self.steps, stream)
        clone.state = copy.deepcopy(self.state)
        return clone


class ExactDriver(EstimatorDriver):
    """Full gradients every step (deterministic smoothed GDA)"""

    def estimate(self, t: int, point: Point) -> Tuple[np.ndarray, np.ndarray]:
        self.state.v, self.state.w = self.oracle.full_grads(point)
        self.state.prev = point
        return self.state.v, self.state.w


class PVRDriver(EstimatorDriver):
    def estimate(self, t: int, point: Point) -> Tuple[np.ndarray, np.ndarray]:
        if t == 0 or self.state.v is None:
            return pvr_update(self.state, self.oracle, True, None, point, None)
        coin = self.stream.bernoulli(self.config.p)
        batch, batch_y = (None, None) if coin else self._batches(self.steps.batch_size)
        return pvr_update(self.state, self.oracle, coin, batch, point, self.state.prev, batch_y)


class ZeroSARAHDriver(EstimatorDriver):
    def start(self, point: Point) -> None:
        self.state = init_zerosarah(self.oracle, point, self.config.lambda0_mode)

    def estimate(self, t: int, point: Point) -> Tuple[np.ndarray, np.ndarray]:
        lam = self.steps.lam
        if t == 0 and self.config.lambda0_mode == Lambda0Mode.FULL_PASS:
            lam = 1.0
        batch, batch_y = self._batches(self.steps.batch_size)
        return zerosarah_update(self.state, self.oracle, batch, point, self.state.prev, lam, batch_y,
                                resum_every=self.config.resum_every)


class MinibatchDriver(EstimatorDriver):
    def estimate(self, t: int, point: Point) -> Tuple[np.ndarray, np.ndarray]:
        batch, batch_y = self._batches(self.steps.batch_size)
        self.state.v, self.state.w = minibatch_update(self.oracle, batch, point, batch_y)
        self.state.updates += 1
        return self.state.v, self.state.w


_DRIVERS = {
    SchemeName.GDA: ExactDriver,
    SchemeName.PVR: PVRDriver,
    SchemeName.ZEROSARAH: ZeroSARAHDriver,
    SchemeName.STOCGDA: MinibatchDriver,
}


def make_driver(oracle: RegularizedOracle, config: SolverConfig, steps: ResolvedSteps,
                stream: RandomStream) -> EstimatorDriver:
    if config.scheme not in _DRIVERS:
        raise ConfigError(f"{config.scheme.value} has no single-step estimator driver")
    return _DRIVERS[config.scheme](oracle, config, steps, stream)


# -- validation and recording --------------------------------------------------------------

def validate_config(problem: MinimaxProblem, config: SolverConfig, steps: ResolvedSteps) -> None:
    """Raise ConfigError before any iteration when a run could not satisfy its invariants"""
    if config.smoothed and not steps.r > problem.lipschitz_L:
        raise ConfigError(f"smoothing weight r={steps.r:.6g} must exceed L={problem.lipschitz_L:.6g}")
    if steps.rho is not None and not 0.0 < steps.rho <= 1.0:
        raise ConfigError(f"rho must lie in (0, 1], got {steps.rho}")
    if not (steps.eta_x > 0 and steps.eta_y > 0):
        raise ConfigError("step sizes must be positive")
    if not 0 < steps.batch_size <= problem.n:
        raise ConfigError(f"batch size must satisfy 0 < b <= n, got b={steps.batch_size}, n={problem.n}")
    if steps.lam is not None and not 0.0 < steps.lam <= 1.0:
        raise ConfigError(f"lambda must lie in (0, 1], got {steps.lam}")


class TraceRecorder:
    """Evaluates diagnostics at trace cadence on a separate oracle counter"""

    def __init__(self, problem: MinimaxProblem, config: SolverConfig, steps: ResolvedSteps,
                 monitor: Optional[Monitor] = None, record_wall: bool = True):
        self.problem = problem
        self.config = config
        self.steps = steps
        self.monitor = monitor
        self.record_wall = record_wall
        self.diag_counter = OracleCounter()
        self.diag = RegularizedOracle(problem, steps.r, self.diag_counter)
        self.constants = None
        if config.potential and config.smoothed:
            if diagnostics_allowed(problem):
                self.constants = theory_constants(problem, config, steps)
            else:
                logger.warning(f"⚠️ Potential not recorded: dim_x * dim_y = {problem.dim_x * problem.dim_y} "
                               f"exceeds NCC_DIAG_MAX_SIZE")
        self.trace: List[TraceRecord] = []
        self.best: Optional[TraceRecord] = None
        self.best_point: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self.started = time.perf_counter()
        self._surrogate_warned = False

    def due(self, t: int) -> bool:
        return t % self.config.trace_every == 0

    def record(self, t: int, point: Point, oracle_count: int, v: Optional[np.ndarray] = None,
               w: Optional[np.ndarray] = None, estimator: Optional[EstimatorState] = None,
               w_point: Optional[Point] = None) -> TraceRecord:
        problem = self.problem
        res_x, res_y = game_stationarity(problem, point.x, point.y, self.steps.residual_eta, self.diag)
        primal = problem.exact_primal(point.x) if problem.has_exact_primal else None

        err_x = err_y = None
        if self.config.estimator_errors and v is not None:
            gx, _ = self.diag.batch_grads(problem.all_indices, point, blocks='x')
            err_x = float(np.linalg.norm(gx - v))
            if w is not None:
                _, gy = self.diag.batch_grads(problem.all_indices, w_point or point, blocks='y')
                err_y = float(np.linalg.norm(gy - w))

        phi = None
        if self.constants is not None and v is not None and w is not None:
            try:
                phi = potential_value(self.diag, point, v, w, self.constants, estimator)
            except DiagnosticError as e:
                logger.warning(f"Potential not recorded at t={t}: {e}")

        accuracy = self.monitor(point.x, point.y) if self.monitor is not None else None
        record = TraceRecord(
            t=t, oracle_count=oracle_count, diag_oracle_count=self.diag_counter.total, primal=primal,
            res_x=res_x, res_y=res_y, err_x=err_x, err_y=err_y, phi=phi,
            wall_s=time.perf_counter() - self.started if self.record_wall else None, accuracy=accuracy,
        )
        self.trace.append(record)
        if self.best is None or record.stationarity < self.best.stationarity:
            self.best = record
            self.best_point = (point.x.copy(), point.y.copy())

        active = problem.surrogate_active(point.x, point.y)
        if active and not self._surrogate_warned:
            logger.warning(f"Surrogate box bound touched in block(s) {', '.join(active)} at t={t}")
            self._surrogate_warned = True
        return record


def _defaults(problem: MinimaxProblem, config: SolverConfig, steps: ResolvedSteps) -> Dict:
    x0, y0 = problem.initial_point()
    return {
        "x0": "P_X(0)",
        "y0": "center(Y)",
        "z0": "x0" if config.smoothed else "tracks x",
        "x0_value": x0.tolist() if x0.size <= 64 else None,
        "y0_value": y0.tolist() if y0.size <= 64 else None,
        "lambda0_mode": config.lambda0_mode.value,
        "coupling": config.coupling.value,
        "residual_eta": steps.residual_eta,
        "set_x": problem.set_x.describe(),
        "set_y": problem.set_y.describe(),
    }


# -- runners -------------------------------------------------------------------------------

def _run_loop(problem: MinimaxProblem, config: SolverConfig, stream: Optional[RandomStream],
              monitor: Optional[Monitor], keep_iterates: bool, record_wall: bool) -> SolverResult:
    steps = resolve_step_sizes(problem, config)
    validate_config(problem, config, steps)
    stream = stream or rng_stream(config.seed, config.display_label)
    counter = OracleCounter()
    oracle = RegularizedOracle(problem, steps.r, counter)
    driver = make_driver(oracle, config, steps, stream)
    recorder = TraceRecorder(problem, config, steps, monitor, record_wall)

    x0, y0 = problem.initial_point()
    state = IterateState(x0, y0, x0.copy())
    iterates = [(x0.copy(), y0.copy(), x0.copy())] if keep_iterates else None
    driver.start(state.point)
    logger.info(f"Running {config.display_label}: T={config.T}, eta_x={steps.eta_x:.4g}, "
                f"eta_y={steps.eta_y:.4g}, rho={steps.rho}, r={steps.r:.4g}, b={steps.batch_size}")

    for t in range(config.T):
        oracle_before = counter.total
        v, w = driver.estimate(t, state.point)
        if recorder.due(t):
            recorder.record(t, state.point, oracle_before, v, w, driver.state)
        state = smoothed_gda_step(state, problem, steps, v, w)
        if iterates is not None:
            iterates.append((state.x.copy(), state.y.copy(), state.z.copy()))

    recorder.record(config.T, state.point, counter.total)
    return SolverResult(config.scheme, recorder.trace, state, recorder.best, recorder.best_point, counter,
                        recorder.diag_counter, steps, driver.state, iterates,
                        time.perf_counter() - recorder.started, _defaults(problem, config, steps))


def _expect(config: SolverConfig, *schemes: SchemeName) -> None:
    if config.scheme not in schemes:
        raise ConfigError(f"expected scheme {' or '.join(s.value for s in schemes)}, got {config.scheme.value}")


def run_pvr_sgda(problem: MinimaxProblem, config: SolverConfig, stream: Optional[RandomStream] = None,
                 monitor: Optional[Monitor] = None, keep_iterates: bool = False,
                 record_wall: bool = True) -> SolverResult:
    _expect(config, SchemeName.PVR)
    return _run_loop(problem, config, stream, monitor, keep_iterates, record_wall)


def run_zerosarah_sgda(problem: MinimaxProblem, config: SolverConfig, stream: Optional[RandomStream] = None,
                       monitor: Optional[Monitor] = None, keep_iterates: bool = False,
                       record_wall: bool = True) -> SolverResult:
    _expect(config, SchemeName.ZEROSARAH)
    return _run_loop(problem, config, stream, monitor, keep_iterates, record_wall)


def run_stocgda(problem: MinimaxProblem, config: SolverConfig, stream: Optional[RandomStream] = None,
                monitor: Optional[Monitor] = None, keep_iterates: bool = False,
                record_wall: bool = True) -> SolverResult:
    _expect(config, SchemeName.STOCGDA)
    return _run_loop(problem, config, stream, monitor, keep_iterates, record_wall)


def run_smoothed_gda(problem: MinimaxProblem, config: SolverConfig, stream: Optional[RandomStream] = None,
                     monitor: Optional[Monitor] = None, keep_iterates: bool = False,
                     record_wall: bool = True) -> SolverResult:
    _expect(config, SchemeName.GDA)
    return _run_loop(problem, config, stream, monitor, keep_iterates, record_wall)


def run_vr_agda(problem: MinimaxProblem, config: SolverConfig, stream: Optional[RandomStream] = None,
                monitor: Optional[Monitor] = None, keep_iterates: bool = False,
                record_wall: bool = True) -> SolverResult:
    """Alternating GDA on f: x-step with SVRG at (x_t, y_t), then y-step with SVRG at (x_{t+1}, y_t)"""
    _expect(config, SchemeName.VR_AGDA)
    steps = resolve_step_sizes(problem, config)
    validate_config(problem, config, steps)
    stream = stream or rng_stream(config.seed, config.display_label)
    counter = OracleCounter()
    oracle = RegularizedOracle(problem, 0.0, counter)
    recorder = TraceRecorder(problem, config, steps, monitor, record_wall)
    estimator = EstimatorState()
    coupled = config.coupling == BatchCoupling.COUPLED

    x0, y0 = problem.initial_point()
    state = IterateState(x0, y0, x0.copy())
    iterates = [(x0.copy(), y0.copy(), x0.copy())] if keep_iterates else None
    logger.info(f"Running {config.display_label}: T={config.T}, eta_x={steps.eta_x:.4g}, "
                f"eta_y={steps.eta_y:.4g}, b={steps.batch_size}, m={steps.snapshot_period}")

    for t in range(config.T):
        oracle_before = counter.total
        if t % steps.snapshot_period == 0:
            refresh_snapshot(estimator, oracle, state.point)
        batch = stream.sample_batch(problem.n, steps.batch_size)
        v, _ = svrg_update(estimator, oracle, batch, state.point, blocks='x')
        x_new = problem.set_x.project(state.x - steps.eta_x * v)
        mid = Point(x_new, state.y, x_new)
        batch_y = batch if coupled else stream.sample_batch(problem.n, steps.batch_size)
        _, w = svrg_update(estimator, oracle, batch_y, mid, blocks='y')
        if recorder.due(t):
            recorder.record(t, state.point, oracle_before, v, w, estimator, w_point=mid)
        y_new = problem.set_y.project(state.y + steps.eta_y * w)
        state = IterateState(x_new, y_new, x_new.copy(), t + 1)
        if iterates is not None:
            iterates.append((state.x.copy(), state.y.copy(), state.z.copy()))

    recorder.record(config.T, state.point, counter.total)
    return SolverResult(config.scheme, recorder.trace, state, recorder.best, recorder.best_point, counter,
                        recorder.diag_counter, steps, estimator, iterates,
                        time.perf_counter() - recorder.started, _defaults(problem, config, steps))


RUNNERS = {
    SchemeName.PVR: run_pvr_sgda,
    SchemeName.ZEROSARAH: run_zerosarah_sgda,
    SchemeName.STOCGDA: run_stocgda,
    SchemeName.VR_AGDA: run_vr_agda,
    SchemeName.GDA: run_smoothed_gda,
}


def run_solver(problem: MinimaxProblem, config: SolverConfig, **kwargs) -> SolverResult:
    return RUNNERS[config.scheme](problem, config, **kwargs)
