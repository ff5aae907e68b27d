"""
Stochastic gradient estimators of the regularized function K(x, z; y) = f(x, y) + (r/2)||x - z||^2.

Schemes: probabilistic variance reduction (full gradient with probability p, otherwise a
SARAH-style difference on one batch), ZeroSARAH with per-component trackers, plain minibatch
gradients and SVRG with a periodic snapshot. Every evaluation is charged to an OracleCounter
in component-gradient units, one unit per component per block.
"""

import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import ArgumentError, EstimatorError
from .models import Lambda0Mode
from .problems import MinimaxProblem

logger = logging.getLogger(__name__)

Blocks = str


class Point(NamedTuple):
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray


@dataclass
class OracleCounter:
    """Component-gradient evaluations per block"""
    x_calls: int = 0
    y_calls: int = 0

    def charge(self, x: int = 0, y: int = 0) -> None:
        self.x_calls += int(x)
        self.y_calls += int(y)

    @property
    def total(self) -> int:
        return self.x_calls + self.y_calls


class RegularizedOracle:
    """Gradients of K built from the problem's component oracles, charged to a counter"""

    def __init__(self, problem: MinimaxProblem, r: float, counter: Optional[OracleCounter] = None):
        if r < 0:
            raise ArgumentError(f"smoothing weight r must be nonnegative, got {r}")
        self.problem = problem
        self.r = float(r)
        self.counter = counter if counter is not None else OracleCounter()

    @property
    def n(self) -> int:
        return self.problem.n

    def with_counter(self, counter: OracleCounter) -> 'RegularizedOracle':
        return RegularizedOracle(self.problem, self.r, counter)

    def _shift(self, point: Point) -> np.ndarray:
        if self.r == 0.0:
            return np.zeros_like(point.x)
        return self.r * (point.x - point.z)

    def value(self, point: Point) -> float:
        return self.problem.value(point.x, point.y) + 0.5 * self.r * float(np.sum((point.x - point.z) ** 2))

    def batch_grads(self, batch: np.ndarray, point: Point,
                    blocks: Blocks = 'xy') -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        """Batch-mean gradients of K; only the requested blocks are charged and returned"""
        batch = self.problem._indices(batch)
        gx, gy = self.problem.batch_grads(batch, point.x, point.y)
        self.counter.charge(x=batch.size if 'x' in blocks else 0, y=batch.size if 'y' in blocks else 0)
        return (gx + self._shift(point) if 'x' in blocks else None,
                gy if 'y' in blocks else None)

    def full_grads(self, point: Point) -> Tuple[np.ndarray, np.ndarray]:
        return self.batch_grads(self.problem.all_indices, point)

    def component_grads(self, batch: np.ndarray, point: Point,
                        blocks: Blocks = 'xy') -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
        """Per-component gradients of K_i; y rows stay compact for y-separable problems"""
        batch = self.problem._indices(batch)
        gx, gy = self.problem.component_grads(batch, point.x, point.y)
        self.counter.charge(x=batch.size if 'x' in blocks else 0, y=batch.size if 'y' in blocks else 0)
        return (gx + self._shift(point)[None, :] if 'x' in blocks else None,
                gy if 'y' in blocks else None)

    def reg_grad_x(self, batch: np.ndarray, x: np.ndarray, z: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.batch_grads(batch, Point(x, y, z), blocks='x')[0]

    def reg_grad_y(self, batch: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.batch_grads(batch, Point(x, y, x), blocks='y')[1]


class TrackerTable:
    """
    Per-component gradient trackers with a running sum.

    Dense tables hold one row per component; diagonal tables hold the single nonzero
    coordinate of each component's row (y-separable problems).
    """

    def __init__(self, n: int, dim: int, diagonal: bool = False):
        if diagonal and dim != n:
            raise ArgumentError(f"diagonal trackers need dim == n, got dim={dim}, n={n}")
        self.n = n
        self.dim = dim
        self.diagonal = diagonal
        self.table = np.zeros(n) if diagonal else np.zeros((n, dim))
        self.total = np.zeros(dim)

    def seed(self, rows: np.ndarray) -> None:
        self.table = np.array(rows, dtype=float)
        self.resum()

    def rows(self, idx: np.ndarray) -> np.ndarray:
        return self.table[idx]

    def mean(self) -> np.ndarray:
        return self.total / self.n

    def update(self, idx: np.ndarray, rows: np.ndarray) -> None:
        delta = rows - self.table[idx]
        if self.diagonal:
            np.add.at(self.total, idx, delta)
        else:
            self.total += delta.sum(axis=0)
        self.table[idx] = rows

    def exact_total(self) -> np.ndarray:
        return self.table.copy() if self.diagonal else self.table.sum(axis=0)

    def resum(self) -> None:
        self.total = self.exact_total()

    def drift(self) -> float:
        """Relative gap between the running sum and a fresh re-accumulation"""
        exact = self.exact_total()
        scale = max(float(np.linalg.norm(exact)), np.finfo(float).tiny)
        return float(np.linalg.norm(self.total - exact) / scale)

    def mse(self, rows: np.ndarray) -> float:
        """(1/n) sum_i ||rows_i - tracker_i||^2 against the exact component gradients"""
        diff = np.asarray(rows) - self.table
        return float(np.sum(diff ** 2) / self.n)


@dataclass
class EstimatorState:
    """Estimator memory owned by one solver run"""
    v: Optional[np.ndarray] = None
    w: Optional[np.ndarray] = None
    prev: Optional[Point] = None
    d: Optional[TrackerTable] = None
    h: Optional[TrackerTable] = None
    snapshot: Optional[Point] = None
    snapshot_grads: Optional[Tuple[np.ndarray, np.ndarray]] = None
    heads: int = 0
    tails: int = 0
    updates: int = 0

    def stored_floats(self) -> int:
        """Floats the estimator keeps between iterations"""
        arrays = [self.v, self.w]
        for point in (self.prev, self.snapshot):
            if point is not None:
                arrays.extend(point)
        if self.snapshot_grads is not None:
            arrays.extend(self.snapshot_grads)
        for tracker in (self.d, self.h):
            if tracker is not None:
                arrays.extend((tracker.table, tracker.total))
        return int(sum(np.size(a) for a in arrays if a is not None))


def _paired(evaluate, batch: np.ndarray, batch_y: Optional[np.ndarray], point: Point):
    """Both blocks on one batch, or the x-block on batch and the y-block on batch_y"""
    if batch_y is None:
        return evaluate(batch, point)
    gx, _ = evaluate(batch, point, blocks='x')
    _, gy = evaluate(batch_y, point, blocks='y')
    return gx, gy


def _dense_mean(oracle: RegularizedOracle, batch: np.ndarray, gy: np.ndarray) -> np.ndarray:
    return oracle.problem.dense_y_mean(np.asarray(batch), gy)


def pvr_update(state: EstimatorState, oracle: RegularizedOracle, coin: bool, batch: Optional[np.ndarray],
               point: Point, prev_point: Optional[Point],
               batch_y: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Probabilistic variance reduction.

    Heads: exact full gradients of K (cost 2n). Tails: v_t = v_{t-1} + grad_x K_B(t) - grad_x K_B(t-1)
    and likewise for w, both differences on the same batch (cost 4|B|). batch_y, when given,
    is an independent batch for the y-block.
    """
    if coin or state.v is None:
        state.v, state.w = oracle.full_grads(point)
        state.heads += 1
    else:
        if prev_point is None or state.w is None:
            raise EstimatorError("tails branch needs the previous point and estimator")
        if batch is None:
            raise ArgumentError("tails branch needs a batch")
        gx_now, gy_now = _paired(oracle.batch_grads, batch, batch_y, point)
        gx_prev, gy_prev = _paired(oracle.batch_grads, batch, batch_y, prev_point)
        state.v = state.v + gx_now - gx_prev
        state.w = state.w + gy_now - gy_prev
        state.tails += 1
    state.prev = point
    state.updates += 1
    return state.v, state.w


def init_zerosarah(oracle: RegularizedOracle, point: Point, mode: Lambda0Mode) -> EstimatorState:
    """
    Tracker initialization.

    full_pass: one full pass seeds d_i = grad_x K_i(0), h_i = grad_y K_i(0) and v_{-1} = grad K(0)
    (cost 2n), so that lambda_0 = 1 yields v_0 = grad K(0) exactly. zero_init: zero trackers and
    zero v_{-1}.
    """
    problem = oracle.problem
    state = EstimatorState()
    state.d = TrackerTable(problem.n, problem.dim_x)
    state.h = TrackerTable(problem.n, problem.dim_y, diagonal=problem.y_separable)
    if mode == Lambda0Mode.FULL_PASS:
        gx, gy = oracle.component_grads(problem.all_indices, point)
        state.d.seed(gx)
        state.h.seed(gy)
        state.v = state.d.mean()
        state.w = state.h.mean()
    else:
        logger.warning("ZeroSARAH with zero trackers and constant lambda: v_0 = lambda * batch gradient")
        state.v = np.zeros(problem.dim_x)
        state.w = np.zeros(problem.dim_y)
    state.prev = point
    return state


def zerosarah_update(state: EstimatorState, oracle: RegularizedOracle, batch: np.ndarray,
                     point: Point, prev_point: Point, lam: float,
                     batch_y: Optional[np.ndarray] = None,
                     resum_every: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    v_t = mean_B(g_i(t) - g_i(t-1)) + (1 - lam) v_{t-1}
          + lam (mean_B(g_i(t-1) - d_i) + mean_all(d)),
    then d_i <- g_i(t) on the batch; w and h likewise. Cost 2|B| per block.
    """
    if state.d is None or state.h is None or state.v is None or state.w is None:
        raise EstimatorError("ZeroSARAH trackers are not initialized")
    if not 0.0 <= lam <= 1.0:
        raise ArgumentError(f"lambda must lie in [0, 1], got {lam}")
    bx = oracle.problem._indices(batch)
    by = bx if batch_y is None else oracle.problem._indices(batch_y)

    gx_now, gy_now = _paired(oracle.component_grads, bx, batch_y, point)
    gx_prev, gy_prev = _paired(oracle.component_grads, bx, batch_y, prev_point)

    state.v = ((gx_now - gx_prev).mean(axis=0) + (1.0 - lam) * state.v
               + lam * ((gx_prev - state.d.rows(bx)).mean(axis=0) + state.d.mean()))
    state.w = (_dense_mean(oracle, by, gy_now - gy_prev) + (1.0 - lam) * state.w
               + lam * (_dense_mean(oracle, by, gy_prev - state.h.rows(by)) + state.h.mean()))

    state.d.update(bx, gx_now)
    state.h.update(by, gy_now)
    state.prev = point
    state.updates += 1
    if resum_every and state.updates % resum_every == 0:
        state.d.resum()
        state.h.resum()
    return state.v, state.w


def refresh_snapshot(state: EstimatorState, oracle: RegularizedOracle, point: Point) -> None:
    state.snapshot = point
    state.snapshot_grads = oracle.full_grads(point)


def svrg_update(state: EstimatorState, oracle: RegularizedOracle, batch: np.ndarray, point: Point,
                blocks: Blocks = 'xy') -> Tuple[Optional[np.ndarray], Optional[np.ndarray]]:
    """v = grad K_B(point) - grad K_B(snapshot) + grad K(snapshot), on one shared batch"""
    if state.snapshot is None or state.snapshot_grads is None:
        raise EstimatorError("SVRG update needs a snapshot")
    gx_now, gy_now = oracle.batch_grads(batch, point, blocks=blocks)
    gx_snap, gy_snap = oracle.batch_grads(batch, state.snapshot, blocks=blocks)
    full_x, full_y = state.snapshot_grads
    v = gx_now - gx_snap + full_x if 'x' in blocks else None
    w = gy_now - gy_snap + full_y if 'y' in blocks else None
    if v is not None:
        state.v = v
    if w is not None:
        state.w = w
    state.updates += 1
    return v, w


def minibatch_update(oracle: RegularizedOracle, batch: np.ndarray, point: Point,
                     batch_y: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Unbiased batch-mean gradients"""
    if batch_y is None:
        return oracle.batch_grads(batch, point)
    v, _ = oracle.batch_grads(batch, point, blocks='x')
    _, w = oracle.batch_grads(batch_y, point, blocks='y')
    return v, w


def pvr_expected_cost(heads: int, tails: int, n: int, batch_size: int) -> int:
    return 2 * n * heads + 4 * batch_size * tails


def zerosarah_expected_cost(T: int, b: int, n: int, mode: Lambda0Mode) -> int:
    return 4 * b * T + (2 * n if mode == Lambda0Mode.FULL_PASS else 0)
