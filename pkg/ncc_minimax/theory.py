"""
Step-size calculators, analysis constants and potential-function diagnostics.

The calculators evaluate the sufficient step-size conditions for the probabilistic
variance-reduced scheme (driven by p) and the ZeroSARAH scheme (driven by b = ceil(a sqrt(n))).
The diagnostics evaluate the inner quantities of the smoothed problem
K(x, z; y) = f(x, y) + (r/2)||x - z||^2:

    x(y, z) = argmin_x K          d(y, z) = min_x K        h(x, z) = max_y K
    P(z) = max_y d(y, z)          x*(z) = argmin_x h(x, z)

and the potential Phi_t built from them.
"""

import copy
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .config import Config
from .errors import ArgumentError, ConfigError, DiagnosticError
from .estimators import EstimatorState, Point, RegularizedOracle
from .models import DescentCheckpoint, DescentReport, SchemeName, SolverConfig, StepSizeBounds
from .problems import MinimaxProblem
from .sets import stationarity_residual

logger = logging.getLogger(__name__)

MIN_ITER_CAP = 100000
MAX_ITER_CAP = 1000000
# r must lie in [2L, 4L]; the relative slack absorbs rounding in user-supplied r
R_RANGE_SLACK = 1e-12
MIN_REPLICAS = 30



def diagnostics_allowed(problem: MinimaxProblem) -> bool:
    return problem.dim_x * problem.dim_y <= Config.DIAG_MAX_SIZE


def require_diagnostic_size(problem: MinimaxProblem) -> None:
    """Inner-oracle diagnostics are limited to dim_x * dim_y <= NCC_DIAG_MAX_SIZE"""
    if not diagnostics_allowed(problem):
        raise DiagnosticError(f"{problem.name}: dim_x * dim_y = {problem.dim_x * problem.dim_y} exceeds "
                              f"NCC_DIAG_MAX_SIZE={Config.DIAG_MAX_SIZE}")


# -- constants -----------------------------------------------------------------------------

def _clamp_L(L: float) -> Tuple[float, bool]:
    if not L > 0:
        raise ConfigError(f"Lipschitz constant must be positive, got {L}")
    if L < 1.0:
        logger.warning(f"Lipschitz estimate {L:.6g} < 1, using L = 1 in the step-size bounds")
        return 1.0, True
    return float(L), False


def _resolve_r(L: float, r: Optional[float]) -> float:
    if r is None:
        return 2.0 * L
    if r < 2.0 * L * (1 - R_RANGE_SLACK) or r > 4.0 * L * (1 + R_RANGE_SLACK):
        raise ConfigError(f"smoothing weight r={r} outside [2L, 4L] = [{2 * L:.6g}, {4 * L:.6g}]")
    return float(r)


def sigma_constants(L: float, r: float) -> Tuple[float, float]:
    """sigma1 = r/(r-L), sigma2 = (2r-L)/(r-L)"""
    if not r > L:
        raise ConfigError(f"need r > L, got r={r}, L={L}")
    return r / (r - L), (2.0 * r - L) / (r - L)


def omega(eta_x: float, L: float, r: float) -> float:
    return (eta_x * L + eta_x * r + 1.0) / (eta_x * r - eta_x * L)


def kappa(eta_y: float, L: float, r: float, D_Y: float) -> float:
    _, sigma2 = sigma_constants(L, r)
    return (1.0 + eta_y * L * sigma2 + eta_y * L) / (eta_y * (r - L)) * D_Y


def pvr_gamma(L: float) -> float:
    return 4.0 + 2.0 / L


def zerosarah_gamma(L: float, lam: float) -> float:
    return 2.0 / lam + 2.0 / (5.0 * lam * L)


def rho_for_horizon(c: float, T: int) -> float:
    """rho = c / sqrt(T), the schedule under which the best iterate is O(T^{-1/4})-stationary"""
    return c / math.sqrt(max(T, 1))


def pvr_step_sizes(L: float, p: float, r: Optional[float] = None, D_Y: float = math.sqrt(2.0)) -> StepSizeBounds:
    """
    Step-size bounds of the probabilistic variance-reduced scheme.

    eta_x <= p / (p(1 + 24L + 2L^2) + 80 L^2 gamma)
    eta_y <= min{p / (2p(1 + 9L) + 10 gamma L^2), 1 / (2L(1 + omega)^2)}
    rho   <= 4p / (1200p + 9 r gamma),  gamma = 4 + 2/L
    """
    if not 0.0 < p <= 1.0:
        raise ConfigError(f"p must lie in (0, 1], got {p}")
    L, clamped = _clamp_L(L)
    r = _resolve_r(L, r)
    gamma = pvr_gamma(L)
    eta_x = p / (p * (1.0 + 24.0 * L + 2.0 * L ** 2) + 80.0 * L ** 2 * gamma)
    # eta_y depends on omega(eta_x) only, so one pass settles it
    om = omega(eta_x, L, r)
    omega_cap = 1.0 / (2.0 * L * (1.0 + om) ** 2)
    eta_y = min(p / (2.0 * p * (1.0 + 9.0 * L) + 10.0 * gamma * L ** 2), omega_cap)
    rho = 4.0 * p / (1200.0 * p + 9.0 * r * gamma)
    sigma1, sigma2 = sigma_constants(L, r)
    return StepSizeBounds(
        scheme=SchemeName.PVR, L=L, r=r, eta_x=eta_x, eta_y=eta_y, rho=rho, gamma=gamma,
        omega=om, sigma1=sigma1, sigma2=sigma2, L_d=L + L * sigma2, kappa=kappa(eta_y, L, r, D_Y),
        D_Y=D_Y, p=p, L_clamped=clamped,
        omega_consistent=eta_y <= 1.0 / (2.0 * L * (1.0 + omega(eta_x, L, r)) ** 2),
    )


def zerosarah_batch(n: int, a: float) -> Tuple[int, bool]:
    """b = ceil(a sqrt(n)), clamped to n; the flag marks the degenerate full batch b = n"""
    b = int(math.ceil(a * math.sqrt(n) - 1e-12))
    if b > n:
        logger.warning(f"a*sqrt(n) = {a * math.sqrt(n):.4g} exceeds n = {n}, using full batches b = n")
    if b >= n:
        return n, True
    return max(b, 1), False


def zerosarah_step_sizes(L: float, n: int, a: float = 2.0, r: Optional[float] = None,
                         D_Y: float = math.sqrt(2.0), b: Optional[int] = None) -> StepSizeBounds:
    """
    Step-size bounds of the ZeroSARAH scheme with lambda = 1/b, b_+ = 1 + b,
    gamma = 2/lambda + 2/(5 lambda L) and tau = 2 gamma lambda^2.

    eta_x <= b / (b(1 + 24L + 2L^2) + 310 L^2 gamma + 160 b tau L^2 b_+)
    eta_y <= min{b / (b(2 + 18L + 20 tau L^2 b_+) + 40 gamma L^2), 1 / (4L(1 + omega)^2)}
    rho   <= 4b / (1200b + 36 r gamma + 18 b tau r b_+)
    """
    if n < 1:
        raise ConfigError(f"n must be positive, got {n}")
    if a < 2.0:
        raise ConfigError(f"batch factor a must be >= 2, got {a}")
    L, clamped = _clamp_L(L)
    r = _resolve_r(L, r)
    b_clamped = False
    if b is None:
        b, b_clamped = zerosarah_batch(n, a)
    elif not 0 < b <= n:
        raise ConfigError(f"batch size must satisfy 0 < b <= n, got b={b}, n={n}")
    lam = 1.0 / b
    gamma = zerosarah_gamma(L, lam)
    tau = 2.0 * gamma * lam ** 2
    b_plus = 1 + b
    eta_x = b / (b * (1.0 + 24.0 * L + 2.0 * L ** 2) + 310.0 * L ** 2 * gamma + 160.0 * b * tau * L ** 2 * b_plus)
    om = omega(eta_x, L, r)
    omega_cap = 1.0 / (4.0 * L * (1.0 + om) ** 2)
    eta_y = min(b / (b * (2.0 + 18.0 * L + 20.0 * tau * L ** 2 * b_plus) + 40.0 * gamma * L ** 2), omega_cap)
    rho = 4.0 * b / (1200.0 * b + 36.0 * r * gamma + 18.0 * b * tau * r * b_plus)
    sigma1, sigma2 = sigma_constants(L, r)
    return StepSizeBounds(
        scheme=SchemeName.ZEROSARAH, L=L, r=r, eta_x=eta_x, eta_y=eta_y, rho=rho, gamma=gamma,
        omega=om, sigma1=sigma1, sigma2=sigma2, L_d=L + L * sigma2, kappa=kappa(eta_y, L, r, D_Y),
        D_Y=D_Y, n=n, a=a, b=b, lam=lam, tau=tau, b_plus=b_plus, L_clamped=clamped, b_clamped=b_clamped,
        omega_consistent=eta_y <= 1.0 / (4.0 * L * (1.0 + omega(eta_x, L, r)) ** 2),
    )


@dataclass(frozen=True)
class TheoryConstants:
    """Analysis constants at the step sizes actually used by a run"""
    scheme: SchemeName
    L: float
    r: float
    eta_x: float
    eta_y: float
    rho: float
    gamma: float
    D_Y: float
    p: Optional[float] = None
    n: Optional[int] = None
    b: Optional[int] = None
    lam: Optional[float] = None

    @property
    def sigma1(self) -> float:
        return sigma_constants(self.L, self.r)[0]

    @property
    def sigma2(self) -> float:
        return sigma_constants(self.L, self.r)[1]

    @property
    def omega(self) -> float:
        return omega(self.eta_x, self.L, self.r)

    @property
    def L_d(self) -> float:
        return self.L + self.L * self.sigma2

    @property
    def kappa(self) -> float:
        return kappa(self.eta_y, self.L, self.r, self.D_Y)

    @property
    def tau(self) -> Optional[float]:
        return None if self.lam is None else 2.0 * self.gamma * self.lam ** 2

    @property
    def b_plus(self) -> Optional[int]:
        return None if self.b is None else 1 + self.b

    @property
    def beta(self) -> Optional[float]:
        return None if self.b is None else 1.0 / self.b

    @property
    def zeta(self) -> Optional[float]:
        if self.b is None or self.n is None:
            return None
        return (1.0 - self.b / self.n) * (1.0 + self.beta)

    @property
    def xi(self) -> Optional[float]:
        if self.b is None or self.n is None:
            return None
        return (1.0 - self.b / self.n) * (1.0 + 1.0 / self.beta)

    @property
    def zerosarah(self) -> bool:
        return self.scheme == SchemeName.ZEROSARAH

    def estimator_weight(self) -> float:
        """Coefficient of the estimator errors in the potential"""
        return self.gamma if self.zerosarah else self.gamma / (2.0 * self.p)

    def descent_coefficients(self) -> Dict[str, float]:
        coefficients = {
            "c_x": 1.0 / (2.0 * self.eta_x),
            "c_y": 1.0 / (4.0 * self.eta_y),
            "c_z": self.r / (6.0 * self.rho),
        }
        if self.zerosarah:
            coefficients.update(c_v=self.gamma * self.lam / 2.0, c_w=self.gamma * self.lam / 2.0,
                                c_tau=self.tau / math.sqrt(self.n))
        else:
            coefficients.update(c_v=self.gamma / 4.0, c_w=self.gamma / 4.0, c_tau=0.0)
        return coefficients

    def as_dict(self) -> Dict[str, Optional[float]]:
        names = ["L", "r", "eta_x", "eta_y", "rho", "gamma", "D_Y", "p", "n", "b", "lam", "sigma1", "sigma2",
                 "omega", "L_d", "kappa", "tau", "b_plus", "beta", "zeta", "xi"]
        return {name: getattr(self, name) for name in names}


def theory_constants(problem: MinimaxProblem, config: SolverConfig, steps: 'ResolvedSteps') -> TheoryConstants:
    """Constants of a smoothed run; the gda scheme is the p = 1 case of the PVR analysis"""
    if not config.smoothed:
        raise ArgumentError(f"{config.scheme.value} does not run on the smoothed function")
    L, _ = _clamp_L(problem.lipschitz_L)
    D_Y = problem.set_y.diameter()
    if config.scheme == SchemeName.ZEROSARAH:
        return TheoryConstants(SchemeName.ZEROSARAH, L, steps.r, steps.eta_x, steps.eta_y, steps.rho,
                               zerosarah_gamma(L, steps.lam), D_Y, n=problem.n, b=steps.batch_size, lam=steps.lam)
    p = config.p if config.scheme == SchemeName.PVR else 1.0
    return TheoryConstants(SchemeName.PVR, L, steps.r, steps.eta_x, steps.eta_y, steps.rho, pvr_gamma(L), D_Y, p=p)


# -- step-size resolution for runs ---------------------------------------------------------

class ResolvedSteps(NamedTuple):
    eta_x: float
    eta_y: float
    rho: Optional[float]
    r: float
    batch_size: int
    lam: Optional[float]
    snapshot_period: Optional[int]
    residual_eta: float
    L: float
    bounds: Optional[StepSizeBounds]

    def as_dict(self) -> Dict:
        info = self._asdict()
        info["bounds"] = self.bounds.model_dump(mode='json') if self.bounds is not None else None
        return info


def resolve_step_sizes(problem: MinimaxProblem, config: SolverConfig) -> ResolvedSteps:
    """Fill every unset knob of a solver config from the bounds and documented defaults"""
    L = problem.lipschitz_L
    n = problem.n
    D_Y = problem.set_y.diameter()
    residual_eta = config.residual_eta or 1.0 / L
    if config.batch_size is not None and config.batch_size > n:
        raise ConfigError(f"batch size {config.batch_size} exceeds n = {n}")

    if not config.smoothed:
        L_eff = max(L, 1.0)
        eta_y = config.eta_y or 1.0 / (4.0 * L_eff)
        eta_x = config.eta_x or eta_y / 10.0
        b = config.batch_size or 1
        m = config.snapshot_period or max(1, n // b) if config.scheme == SchemeName.VR_AGDA else None
        return ResolvedSteps(eta_x, eta_y, None, 0.0, b, None, m, residual_eta, L, None)

    need_bounds = None in (config.eta_x, config.eta_y, config.rho, config.r)
    if config.scheme == SchemeName.ZEROSARAH:
        compute = lambda: zerosarah_step_sizes(L, n, config.a, config.r, D_Y, b=config.batch_size)
    else:
        p = config.p if config.scheme == SchemeName.PVR else 1.0
        compute = lambda: pvr_step_sizes(L, p, config.r, D_Y)
    if need_bounds:
        bounds = compute()
    else:
        try:
            bounds = compute()
        except ConfigError as e:
            logger.info(f"All step sizes set explicitly; bounds not available: {e}")
            bounds = None

    r = config.r if config.r is not None else bounds.r
    eta_x = config.eta_x or bounds.eta_x
    eta_y = config.eta_y or bounds.eta_y
    rho = config.rho or bounds.rho
    if config.rho_horizon_scale is not None:
        rho = min(rho, rho_for_horizon(config.rho_horizon_scale, config.T), 1.0)
    if config.scheme == SchemeName.ZEROSARAH:
        b = config.batch_size or (bounds.b if bounds is not None else zerosarah_batch(n, config.a)[0])
        lam = config.lam or 1.0 / b
    elif config.scheme == SchemeName.PVR:
        b, lam = config.batch_size or 1, None
    else:
        b, lam = n, None
    return ResolvedSteps(eta_x, eta_y, rho, r, b, lam, None, residual_eta, L, bounds)


# -- stationarity ------------------------------------------------------------------------

def game_stationarity(problem: MinimaxProblem, x: np.ndarray, y: np.ndarray, eta: float,
                      oracle: Optional[RegularizedOracle] = None) -> Tuple[float, float]:
    """Projected-gradient residuals of both blocks at exact full gradients of f"""
    gx, gy = problem.grads(x, y)
    if oracle is not None:
        oracle.counter.charge(x=problem.n, y=problem.n)
    return (stationarity_residual(problem.set_x, x, gx, eta),
            stationarity_residual(problem.set_y, y, -gy, eta))


# -- inner oracles -------------------------------------------------------------------------

class ProxSolution(NamedTuple):
    value: float
    x_star: np.ndarray
    y: Optional[np.ndarray]


def _x_gradient(oracle: RegularizedOracle, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return oracle.batch_grads(oracle.problem.all_indices, Point(x, y, z), blocks='x')[0]


def _y_gradient(oracle: RegularizedOracle, x: np.ndarray, y: np.ndarray, z: np.ndarray) -> np.ndarray:
    return oracle.batch_grads(oracle.problem.all_indices, Point(x, y, z), blocks='y')[1]


def _require_strong_convexity(oracle: RegularizedOracle) -> float:
    L = oracle.problem.lipschitz_L
    if not oracle.r > L:
        raise DiagnosticError(f"inner problem needs r > L, got r={oracle.r}, L={L}")
    return L


def inner_min_x(oracle: RegularizedOracle, y: np.ndarray, z: np.ndarray, tol: float = 1e-10,
                x0: Optional[np.ndarray] = None, max_iter: int = MIN_ITER_CAP, exact: bool = True) -> np.ndarray:
    """x(y, z) by projected gradient with step 1/(L + r), or in closed form when the problem has one"""
    if not tol > 0:
        raise ArgumentError(f"tol must be positive, got {tol}")
    problem = oracle.problem
    if exact and hasattr(problem, 'argmin_x_closed_form'):
        return problem.argmin_x_closed_form(y, z, oracle.r)
    L = _require_strong_convexity(oracle)
    step = 1.0 / (L + oracle.r)
    x = problem.set_x.project(np.zeros(problem.dim_x) if x0 is None else np.asarray(x0, dtype=float))
    for _ in range(max_iter):
        x_next = problem.set_x.project(x - step * _x_gradient(oracle, x, y, z))
        if np.linalg.norm(x_next - x) / step <= tol:
            return x_next
        x = x_next
    raise DiagnosticError(f"inner minimization did not reach tol={tol} in {max_iter} steps")


def dual_value(oracle: RegularizedOracle, y: np.ndarray, z: np.ndarray, tol: float = 1e-10,
               exact: bool = True) -> float:
    """d(y, z) = K(x(y, z), z; y)"""
    x = inner_min_x(oracle, y, z, tol, exact=exact)
    return oracle.value(Point(x, np.asarray(y, dtype=float), np.asarray(z, dtype=float)))


def _ascent(oracle: RegularizedOracle, gradient, value, y0: np.ndarray, step: float, tol: float,
            max_iter: int) -> Tuple[float, np.ndarray]:
    """Projected ascent on a concave function over set_y, stopped by a Frank-Wolfe gap certificate"""
    set_y = oracle.problem.set_y
    y = set_y.project(y0)
    for _ in range(max_iter):
        g = gradient(y)
        gap = float(g @ (set_y.linear_maximizer(g) - y))
        if gap <= tol:
            return value(y), y
        y = set_y.project(y + step * g)
    raise DiagnosticError(f"inner maximization did not certify tol={tol} in {max_iter} steps")


def prox_value(oracle: RegularizedOracle, z: np.ndarray, tol: float = 1e-10, exact: bool = True,
               max_iter: int = MAX_ITER_CAP) -> ProxSolution:
    """P(z) = max_y d(y, z) with the maximizing y and x*(z)"""
    problem = oracle.problem
    z = np.asarray(z, dtype=float)
    if exact and hasattr(problem, 'prox_reference'):
        value, x_star = problem.prox_reference(z, oracle.r)
        return ProxSolution(value, x_star, None)
    L = _require_strong_convexity(oracle)
    _, sigma2 = sigma_constants(L, oracle.r)
    step = 1.0 / (L + L * sigma2)
    cache: Dict[str, np.ndarray] = {}

    def gradient(y):
        # d is differentiable in y with gradient grad_y K(x(y, z), z; y)
        cache['x'] = inner_min_x(oracle, y, z, tol * 1e-2, x0=cache.get('x'), exact=exact)
        return _y_gradient(oracle, cache['x'], y, z)

    def value(y):
        return oracle.value(Point(cache['x'], y, z))

    value_, y_star = _ascent(oracle, gradient, value, problem.set_y.center(), step, tol, max_iter)
    return ProxSolution(value_, cache['x'], y_star)


def x_star(oracle: RegularizedOracle, z: np.ndarray, tol: float = 1e-10, exact: bool = True) -> np.ndarray:
    return prox_value(oracle, z, tol, exact=exact).x_star


def primal_envelope(oracle: RegularizedOracle, x: np.ndarray, z: np.ndarray, tol: float = 1e-10,
                    max_iter: int = MAX_ITER_CAP) -> float:
    """h(x, z) = max_y K(x, z; y)"""
    problem = oracle.problem
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    shift = 0.5 * oracle.r * float(np.sum((x - z) ** 2))
    if problem.has_exact_primal:
        return problem.exact_primal(x) + shift
    step = 1.0 / problem.lipschitz_L
    value, _ = _ascent(oracle, lambda y: _y_gradient(oracle, x, y, z),
                       lambda y: oracle.value(Point(x, y, z)), problem.set_y.center(), step, tol, max_iter)
    return value


def x_plus(oracle: RegularizedOracle, x: np.ndarray, y: np.ndarray, z: np.ndarray, eta_x: float) -> np.ndarray:
    """P_X(x - eta_x grad_x K(x, z; y))"""
    return oracle.problem.set_x.project(x - eta_x * _x_gradient(oracle, x, y, z))


def y_plus(oracle: RegularizedOracle, y: np.ndarray, z: np.ndarray, eta_y: float, tol: float = 1e-10,
           exact: bool = True) -> np.ndarray:
    """P_Y(y + eta_y grad_y K(x(y, z), z; y))"""
    x = inner_min_x(oracle, y, z, tol, exact=exact)
    return oracle.problem.set_y.project(y + eta_y * _y_gradient(oracle, x, y, z))


# -- potential -----------------------------------------------------------------------------

def potential_terms(oracle: RegularizedOracle, point: Point, v: np.ndarray, w: np.ndarray,
                    constants: TheoryConstants, estimator: Optional[EstimatorState] = None,
                    tol: float = 1e-10, prox: Optional[ProxSolution] = None) -> Dict[str, float]:
    """
    Pieces of Phi_t = K_t - 2 d(y_t, z_t) + 2 P(z_t) + weight (||grad_x K_t - v_t||^2 + ||grad_y K_t - w_t||^2)
    [+ tau (tracker mean-square errors) for ZeroSARAH].
    """
    problem = oracle.problem
    gx, gy = oracle.full_grads(point)
    terms = {
        "K": oracle.value(point),
        "d": dual_value(oracle, point.y, point.z, tol),
        "P": (prox or prox_value(oracle, point.z, tol)).value,
        "err_x_sq": float(np.sum((gx - v) ** 2)),
        "err_y_sq": float(np.sum((gy - w) ** 2)),
        "tracker_mse": 0.0,
    }
    if constants.zerosarah:
        if estimator is None or estimator.d is None or estimator.h is None:
            raise DiagnosticError("ZeroSARAH potential needs the tracker tables")
        cx, cy = oracle.component_grads(problem.all_indices, point)
        terms["tracker_mse"] = estimator.d.mse(cx) + estimator.h.mse(cy)
    return terms


def combine_potential(terms: Dict[str, float], constants: TheoryConstants) -> float:
    phi = terms["K"] - 2.0 * terms["d"] + 2.0 * terms["P"]
    phi += constants.estimator_weight() * (terms["err_x_sq"] + terms["err_y_sq"])
    if constants.zerosarah:
        phi += constants.tau * terms["tracker_mse"]
    return float(phi)


def potential_value(oracle: RegularizedOracle, point: Point, v: np.ndarray, w: np.ndarray,
                    constants: TheoryConstants, estimator: Optional[EstimatorState] = None,
                    tol: float = 1e-10) -> float:
    require_diagnostic_size(oracle.problem)
    return combine_potential(potential_terms(oracle, point, v, w, constants, estimator, tol), constants)


# -- expected descent ----------------------------------------------------------------------

def _replica(driver, oracle: RegularizedOracle, state, steps: ResolvedSteps, constants: TheoryConstants,
             t: int, prox_t: ProxSolution, coupling: float, y_gap_sq: float, tol: float) -> Tuple[float, float]:
    """One draw of Phi_t - Phi_{t+1} and the matching right-hand side"""
    from .solvers import smoothed_gda_step

    problem = oracle.problem
    point = state.point
    v, w = driver.estimate(t, point)
    terms_t = potential_terms(oracle, point, v, w, constants, driver.state, tol, prox=prox_t)
    phi_t = combine_potential(terms_t, constants)

    nxt = smoothed_gda_step(state, problem, steps, v, w)
    v1, w1 = driver.estimate(t + 1, nxt.point)
    phi_next = combine_potential(potential_terms(oracle, nxt.point, v1, w1, constants, driver.state, tol), constants)

    c = constants.descent_coefficients()
    rhs = (c["c_x"] * float(np.sum((nxt.x - state.x) ** 2))
           + c["c_y"] * y_gap_sq
           + c["c_z"] * float(np.sum((nxt.z - state.z) ** 2))
           + c["c_v"] * terms_t["err_x_sq"] + c["c_w"] * terms_t["err_y_sq"]
           + c["c_tau"] * terms_t["tracker_mse"]
           - coupling)
    return phi_t - phi_next, rhs


def check_descent(problem: MinimaxProblem, config: SolverConfig, checkpoints: Sequence[int], replicas: int = 100,
                  master_seed: int = 0, tol: float = 1e-11, workers: int = 1) -> DescentReport:
    """
    Monte-Carlo estimate of E[Phi_t - Phi_{t+1}] from a common state at each checkpointed t,
    compared with the descent bound minus the 24 r rho kappa ||y_t - y_+(z_t)|| coupling term.
    A checkpoint passes when mean(lhs - rhs) + 3 SE >= 0.
    """
    from .solvers import make_driver, smoothed_gda_step, IterateState
    from .streams import rng_stream

    if replicas < MIN_REPLICAS:
        raise ArgumentError(f"descent checks need at least {MIN_REPLICAS} replicas, got {replicas}")
    if not config.smoothed:
        raise ArgumentError(f"{config.scheme.value} has no potential function")
    require_diagnostic_size(problem)
    steps = resolve_step_sizes(problem, config)
    constants = theory_constants(problem, config, steps)
    checkpoint_set = sorted(set(int(t) for t in checkpoints))
    base_oracle = RegularizedOracle(problem, steps.r)
    root_stream = rng_stream(master_seed, f"descent/{config.display_label}")
    base_stream = root_stream.spawn("base")
    driver = make_driver(base_oracle, config, steps, base_stream)

    x0, y0 = problem.initial_point()
    state = IterateState(x0, y0, x0.copy())
    driver.start(state.point)
    report = DescentReport(scheme=config.scheme, replicas=replicas)

    for t in range(checkpoint_set[-1] + 1 if checkpoint_set else 0):
        if t in checkpoint_set:
            diag = RegularizedOracle(problem, steps.r)
            prox_t = prox_value(diag, state.z, tol)
            y_next = y_plus(diag, state.y, state.z, steps.eta_y, tol)
            y_gap = float(np.linalg.norm(state.y - y_next))
            coupling = 24.0 * steps.r * steps.rho * constants.kappa * y_gap

            def run(k: int, t=t, prox_t=prox_t, coupling=coupling, y_gap=y_gap):
                replica_oracle = RegularizedOracle(problem, steps.r)
                fork = driver.fork(root_stream.spawn(f"t{t}/r{k}"), replica_oracle)
                return _replica(fork, replica_oracle, copy.deepcopy(state), steps, constants, t, prox_t,
                                coupling, y_gap ** 2, tol)

            with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
                draws = list(pool.map(run, range(replicas)))
            lhs = np.array([d[0] for d in draws])
            rhs = np.array([d[1] for d in draws])
            diff = lhs - rhs
            stderr = float(np.std(diff, ddof=1) / math.sqrt(replicas))
            verdict = bool(diff.mean() + 3.0 * stderr >= 0.0)
            report.checkpoints.append(DescentCheckpoint(iteration=t, lhs=float(lhs.mean()), rhs=float(rhs.mean()),
                                                                stderr=stderr, verdict=verdict))
            logger.info(f"Descent checkpoint t={t}: lhs={lhs.mean():.4e} rhs={rhs.mean():.4e} "
                        f"se={stderr:.2e} {'ok' if verdict else 'VIOLATED'}")
        v, w = driver.estimate(t, state.point)
        state = smoothed_gda_step(state, problem, steps, v, w)
    return report


def dual_error_bound_terms(problem: MinimaxProblem, oracle: RegularizedOracle, y: np.ndarray, z: np.ndarray,
                           constants: TheoryConstants, tol: float = 1e-10) -> Tuple[float, float]:
    """(||x*(z) - x(y_+(z), z)||^2, kappa ||y - y_+(z)||) at one state"""
    y_next = y_plus(oracle, y, z, constants.eta_y, tol)
    gap = float(np.sum((x_star(oracle, z, tol) - inner_min_x(oracle, y_next, z, tol)) ** 2))
    return gap, constants.kappa * float(np.linalg.norm(np.asarray(y) - y_next))


def checkpoint_schedule(T: int, count: int) -> List[int]:
    """count evenly spread iterations in [0, T)"""
    if count <= 0 or T <= 0:
        return []
    return sorted(set(int(t) for t in np.linspace(0, T - 1, count)))
