"""
Finite-sum minimax problem oracles.

A problem is f(x, y) = (1/n) sum_i f_i(x, y), nonconvex in x over a compact set_x and
concave in y over a compact set_y. Concrete instances: a toy bilinear game with a closed-form
dual maximum, distributionally robust logistic regression over the simplex, and the
data-poisoning game in solver form.
"""

import logging
from abc import ABC, abstractmethod
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import optimize, sparse
from scipy.special import expit

from .config import Config
from .data import Dataset
from .errors import ArgumentError, UnsupportedProblemError
from .sets import Box, FeasibleSet, InfBall, Simplex

logger = logging.getLogger(__name__)

Indices = Union[int, Sequence[int], np.ndarray]

LIPSCHITZ_SAFETY = 1.5


class MinimaxProblem(ABC):
    """Oracle interface shared by every problem instance"""

    name: str = "problem"
    # component i's y-gradient is supported on coordinate i only
    y_separable: bool = False
    # blocks whose feasible set is a large Box standing in for an unconstrained variable
    surrogate_blocks: Tuple[str, ...] = ()

    def __init__(self, n: int, set_x: FeasibleSet, set_y: FeasibleSet):
        if n < 1:
            raise ArgumentError(f"problem needs at least one component, got n={n}")
        self.n = int(n)
        self.set_x = set_x
        self.set_y = set_y

    @property
    def dim_x(self) -> int:
        return self.set_x.dim

    @property
    def dim_y(self) -> int:
        return self.set_y.dim

    def _indices(self, idx: Indices) -> np.ndarray:
        idx = np.atleast_1d(np.asarray(idx, dtype=np.int64))
        if idx.size == 0:
            raise ArgumentError("empty batch")
        if idx.min() < 0 or idx.max() >= self.n:
            raise ArgumentError(f"component index out of range [0, {self.n})")
        return idx

    def _point(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.shape != (self.dim_x,) or y.shape != (self.dim_y,):
            raise ArgumentError(
                f"expected x in R^{self.dim_x} and y in R^{self.dim_y}, got {x.shape} and {y.shape}"
            )
        return x, y

    @property
    def all_indices(self) -> np.ndarray:
        return np.arange(self.n)

    # -- oracles implemented by every instance --------------------------------------------

    @abstractmethod
    def component_values(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """f_i(x, y) for every i in idx"""

    @abstractmethod
    def component_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """
        Per-component gradients.

        Returns:
            (Gx, Gy): Gx has shape (b, dim_x). Gy has shape (b, dim_y), or (b,) holding the
            single nonzero coordinate idx[k] of each row when the problem is y_separable.
        """

    @property
    @abstractmethod
    def lipschitz_L(self) -> float:
        """Smoothness constant consumed by the step-size calculators"""

    # -- derived oracles -------------------------------------------------------------------

    def batch_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Batch means of the component gradients, dense in both blocks"""
        idx = self._indices(idx)
        gx, gy = self.component_grads(idx, x, y)
        return gx.mean(axis=0), self.dense_y_mean(idx, gy)

    def dense_y_mean(self, idx: np.ndarray, gy: np.ndarray) -> np.ndarray:
        if not self.y_separable:
            return gy.mean(axis=0)
        out = np.zeros(self.dim_y)
        np.add.at(out, idx, gy)
        return out / idx.size

    def dense_y_rows(self, idx: np.ndarray, gy: np.ndarray) -> np.ndarray:
        if not self.y_separable:
            return gy
        rows = np.zeros((idx.size, self.dim_y))
        rows[np.arange(idx.size), idx] = gy
        return rows

    def comp_grad_x(self, i: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.component_grads([i], x, y)[0][0]

    def comp_grad_y(self, i: int, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        idx = self._indices([i])
        _, gy = self.component_grads(idx, x, y)
        return self.dense_y_rows(idx, gy)[0]

    def value(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(np.mean(self.component_values(self.all_indices, x, y)))

    def grads(self, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self.batch_grads(self.all_indices, x, y)

    def grad_x(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.grads(x, y)[0]

    def grad_y(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return self.grads(x, y)[1]

    def exact_primal(self, x: np.ndarray) -> float:
        """max_y f(x, y) in closed form"""
        raise UnsupportedProblemError(f"{self.name} has no closed-form dual maximum")

    @property
    def has_exact_primal(self) -> bool:
        return False

    def assumption_lipschitz(self) -> float:
        """Joint gradient Lipschitz constant over both blocks"""
        return self.lipschitz_L

    def initial_point(self) -> Tuple[np.ndarray, np.ndarray]:
        """x0 = P_X(0), y0 = center of set_y"""
        return self.set_x.project(np.zeros(self.dim_x)), self.set_y.center()

    def surrogate_active(self, x: np.ndarray, y: np.ndarray) -> List[str]:
        """Surrogate Box blocks whose bound is touched at (x, y)"""
        active = []
        if 'x' in self.surrogate_blocks and self.set_x.touches_boundary(x):
            active.append('x')
        if 'y' in self.surrogate_blocks and self.set_y.touches_boundary(y):
            active.append('y')
        return active

    def describe(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "n": self.n,
            "dim_x": self.dim_x,
            "dim_y": self.dim_y,
            "set_x": self.set_x.describe(),
            "set_y": self.set_y.describe(),
            "lipschitz_L": self.lipschitz_L,
            "assumption_lipschitz": self.assumption_lipschitz(),
        }


class ToyBilinearProblem(MinimaxProblem):
    """f_i(x, y) = x^T A_i y - (c/2)||x||^2 over Box x Simplex"""

    name = "toy_bilinear"

    def __init__(self, A: np.ndarray, c: float = 1.0, bound: float = 1.0):
        A = np.asarray(A, dtype=float)
        if A.ndim == 2:
            A = A[None, :, :]
        if A.ndim != 3:
            raise ArgumentError(f"A must be a matrix or a stack of matrices, got shape {A.shape}")
        if not c > 0:
            raise ArgumentError(f"curvature c must be positive, got {c}")
        n, dim_x, dim_y = A.shape
        super().__init__(n, Box.symmetric(bound, dim_x), Simplex(dim_y))
        self.A_components = A
        self.A = A.mean(axis=0)
        self.c = float(c)
        self.bound = float(bound)

    @classmethod
    def random(cls, n: int, dim_x: int, dim_y: int, c: float = 1.0, noise: float = 0.5,
               seed: int = 0, bound: float = 1.0) -> 'ToyBilinearProblem':
        """
        Seeded instance whose components scatter around a common mean matrix.
        The mean has unit spectral norm, and each component deviates from it by about `noise` in spectral norm.
        """
        from .streams import rng_stream
        stream = rng_stream(seed, f"toy/{n}x{dim_x}x{dim_y}")
        base = stream.normal((dim_x, dim_y))
        base /= np.linalg.norm(base, 2)
        jitter = stream.normal((n, dim_x, dim_y))
        jitter -= jitter.mean(axis=0, keepdims=True)
        jitter /= np.sqrt(dim_x) + np.sqrt(dim_y)
        return cls(base[None, :, :] + noise * jitter, c=c, bound=bound)

    def component_values(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        idx = self._indices(idx)
        x, y = self._point(x, y)
        return np.einsum('j,ijk,k->i', x, self.A_components[idx], y) - 0.5 * self.c * float(x @ x)

    def component_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = self._indices(idx)
        x, y = self._point(x, y)
        A = self.A_components[idx]
        gx = np.einsum('ijk,k->ij', A, y) - self.c * x[None, :]
        gy = np.einsum('j,ijk->ik', x, A)
        return gx, gy

    def batch_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = self._indices(idx)
        x, y = self._point(x, y)
        A = self.A if idx.size == self.n else self.A_components[idx].mean(axis=0)
        return A @ y - self.c * x, A.T @ x

    @cached_property
    def lipschitz_L(self) -> float:
        return float(np.linalg.norm(self.A, 2) + self.c)

    @cached_property
    def component_lipschitz(self) -> float:
        """max_i ||A_i||_2 + c, the smoothness constant of the worst single component"""
        return float(max(np.linalg.norm(a, 2) for a in self.A_components) + self.c)

    @property
    def has_exact_primal(self) -> bool:
        return True

    def exact_primal(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(np.max(self.A.T @ x) - 0.5 * self.c * float(x @ x))

    def argmin_x_closed_form(self, y: np.ndarray, z: np.ndarray, r: float) -> np.ndarray:
        """x(y, z) = argmin_x f(x, y) + (r/2)||x - z||^2; separable, so clipping is exact"""
        if not r > self.c:
            raise ArgumentError(f"closed-form inner minimizer needs r > c, got r={r}, c={self.c}")
        return self.set_x.project((r * np.asarray(z) - self.A @ np.asarray(y)) / (r - self.c))

    def prox_reference(self, z: np.ndarray, r: float) -> Tuple[float, np.ndarray]:
        """
        Reference P(z) = min_x max_y K(x, z; y) and x*(z) from the epigraph QP
        min_{x, s} s - (c/2)||x||^2 + (r/2)||x - z||^2  s.t.  s >= (A^T x)_j, x in Box.
        """
        z = np.asarray(z, dtype=float)
        d = self.dim_x
        A = self.A

        def objective(u):
            x, s = u[:d], u[d]
            return s - 0.5 * self.c * x @ x + 0.5 * r * (x - z) @ (x - z)

        def jacobian(u):
            x = u[:d]
            return np.concatenate([(r - self.c) * x - r * z, [1.0]])

        x0 = self.argmin_x_closed_form(self.set_y.center(), z, r)
        u0 = np.concatenate([x0, [np.max(A.T @ x0)]])
        constraints = [{'type': 'ineq',
                        'fun': lambda u: u[d] - A.T @ u[:d],
                        'jac': lambda u: np.hstack([-A.T, np.ones((self.dim_y, 1))])}]
        bounds = [(lo, hi) for lo, hi in zip(self.set_x.lo, self.set_x.hi)] + [(None, None)]
        result = optimize.minimize(objective, u0, jac=jacobian, bounds=bounds, constraints=constraints,
                                   method='SLSQP', options={'ftol': 1e-14, 'maxiter': 1000})
        if not result.success:
            logger.warning(f"SLSQP reference prox did not converge: {result.message}")
        x_star = self.set_x.project(result.x[:d])
        value = float(np.max(A.T @ x_star) - 0.5 * self.c * x_star @ x_star
                      + 0.5 * r * (x_star - z) @ (x_star - z))
        return value, x_star

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update(c=self.c, bound=self.bound, component_lipschitz=self.component_lipschitz)
        return info


class RobustLogisticProblem(MinimaxProblem):
    """
    Distributionally robust logistic regression
        f(x, y) = sum_i y_i log(1 + exp(-b_i a_i^T x)) + g(x) [- (lam1/2)||n y - 1||^2]
    with g(x) = lam2 sum_j alpha x_j^2 / (1 + alpha x_j^2), split into components
    f_i = n y_i l_i(x) + g(x) so that the mean recovers f.
    """

    name = "robust_logistic"
    y_separable = True
    surrogate_blocks = ('x',)

    def __init__(self, dataset: Dataset, lam2: float = 1e-3, alpha: float = 10.0,
                 dual_reg: bool = False, lam1: Optional[float] = None, bound: float = 100.0):
        dataset = dataset.to_signed()
        n = dataset.n
        super().__init__(n, Box.symmetric(bound, dataset.d), Simplex(n))
        self.dataset = dataset
        self.features = sparse.csr_matrix(dataset.features) if dataset.is_sparse else np.asarray(dataset.features)
        self.labels = dataset.labels.astype(float)
        self.lam2 = float(lam2)
        self.alpha = float(alpha)
        self.dual_reg = bool(dual_reg)
        self.lam1 = (1.0 / n ** 2 if lam1 is None else float(lam1)) if self.dual_reg else 0.0
        self.bound = float(bound)
        if self.dual_reg:
            logger.info(f"Dual regularizer enabled: lam1={self.lam1:.3g}")

    def _rows(self, idx: np.ndarray):
        return self.features[idx]

    def _margins(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.labels[idx] * np.asarray(self._rows(idx) @ x).ravel()

    def losses(self, x: np.ndarray, idx: Optional[np.ndarray] = None) -> np.ndarray:
        """l_i(x) = log(1 + exp(-b_i a_i^T x))"""
        idx = self.all_indices if idx is None else idx
        return np.logaddexp(0.0, -self._margins(idx, np.asarray(x, dtype=float)))

    def regularizer(self, x: np.ndarray) -> float:
        ax2 = self.alpha * x * x
        return float(self.lam2 * np.sum(ax2 / (1.0 + ax2)))

    def regularizer_grad(self, x: np.ndarray) -> np.ndarray:
        return self.lam2 * 2.0 * self.alpha * x / (1.0 + self.alpha * x * x) ** 2

    def _dual_penalty(self, idx: np.ndarray, y: np.ndarray) -> np.ndarray:
        return 0.5 * self.lam1 * self.n * (self.n * y[idx] - 1.0) ** 2

    def component_values(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        idx = self._indices(idx)
        x, y = self._point(x, y)
        values = self.n * y[idx] * self.losses(x, idx) + self.regularizer(x)
        if self.dual_reg:
            values -= self._dual_penalty(idx, y)
        return values

    def _coefficients(self, idx: np.ndarray, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        margins = self._margins(idx, x)
        # d l_i / d(a_i^T x) = -b_i sigmoid(-m_i)
        slope = -self.labels[idx] * expit(-margins)
        losses = np.logaddexp(0.0, -margins)
        gy = self.n * losses
        if self.dual_reg:
            gy = gy - self.lam1 * self.n ** 2 * (self.n * y[idx] - 1.0)
        return self.n * y[idx] * slope, gy

    def component_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = self._indices(idx)
        x, y = self._point(x, y)
        coef, gy = self._coefficients(idx, x, y)
        rows = self._rows(idx)
        if sparse.issparse(rows):
            gx = rows.multiply(coef[:, None]).toarray()
        else:
            gx = rows * coef[:, None]
        return gx + self.regularizer_grad(x)[None, :], gy

    def batch_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = self._indices(idx)
        x, y = self._point(x, y)
        coef, gy = self._coefficients(idx, x, y)
        gx = np.asarray(self._rows(idx).T @ coef).ravel() / idx.size + self.regularizer_grad(x)
        return gx, self.dense_y_mean(idx, gy)

    @cached_property
    def _max_row_norm_sq(self) -> float:
        if sparse.issparse(self.features):
            return float(self.features.multiply(self.features).sum(axis=1).max())
        return float(np.max(np.sum(self.features ** 2, axis=1)))

    @property
    def lipschitz_L(self) -> float:
        L = 0.25 * self._max_row_norm_sq + 2.0 * self.lam2 * self.alpha
        if self.dual_reg:
            L += self.lam1 * self.n ** 2
        return float(L)

    def assumption_lipschitz(self) -> float:
        coupling = np.sqrt(self.n * self._max_row_norm_sq)
        return float(self.lipschitz_L + coupling)

    @property
    def has_exact_primal(self) -> bool:
        return True

    def exact_primal(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        losses = self.losses(x)
        if not self.dual_reg:
            return float(np.max(losses) + self.regularizer(x))
        # strongly concave in y: the maximizer is a single simplex projection
        y = self.set_y.project(losses / (self.lam1 * self.n ** 2) + 1.0 / self.n)
        return float(y @ losses - 0.5 * self.lam1 * np.sum((self.n * y - 1.0) ** 2) + self.regularizer(x))

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update(lam2=self.lam2, alpha=self.alpha, dual_reg=self.dual_reg, lam1=self.lam1, bound=self.bound)
        return info


class PoisonProblem(MinimaxProblem):
    """
    Data poisoning in solver form: min over the perturbation x in InfBall(eps) of
    max over model parameters theta in a large Box of -[F(x, theta; D1) + F(0, theta; D2)],
    F the average cross-entropy of a logistic model on a subset.
    """

    name = "poison"
    surrogate_blocks = ('y',)

    def __init__(self, poisoned: Dataset, clean: Dataset, epsilon: float = 2.0,
                 theta_bound: float = 1e3, theta_reg: float = 0.0, lipschitz_seed: int = 0):
        if poisoned.d != clean.d:
            raise ArgumentError(f"feature dimensions differ: {poisoned.d} vs {clean.d}")
        d = poisoned.d
        n_poison, n_clean = poisoned.n, clean.n
        super().__init__(n_poison + n_clean, InfBall(epsilon, d), Box.symmetric(theta_bound, d))
        self.features = np.vstack([poisoned.dense(), clean.dense()])
        self.targets = np.concatenate([poisoned.to_binary().labels, clean.to_binary().labels]).astype(float)
        self.poisoned_mask = np.concatenate([np.ones(n_poison), np.zeros(n_clean)])
        # component weights so that the mean over all n equals F(D1) + F(D2)
        self.weights = np.concatenate([np.full(n_poison, self.n / n_poison), np.full(n_clean, self.n / n_clean)])
        self.epsilon = float(epsilon)
        self.theta_bound = float(theta_bound)
        self.theta_reg = float(theta_reg)
        self.lipschitz_seed = int(lipschitz_seed)

    def _inputs(self, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.features[idx] + self.poisoned_mask[idx, None] * x[None, :]

    def component_values(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        idx = self._indices(idx)
        x, theta = self._point(x, y)
        u = self._inputs(idx, x) @ theta
        cross_entropy = np.logaddexp(0.0, u) - self.targets[idx] * u
        return -self.weights[idx] * cross_entropy - 0.5 * self.theta_reg * float(theta @ theta)

    def component_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = self._indices(idx)
        x, theta = self._point(x, y)
        inputs = self._inputs(idx, x)
        residual = -self.weights[idx] * (expit(inputs @ theta) - self.targets[idx])
        gx = (residual * self.poisoned_mask[idx])[:, None] * theta[None, :]
        gy = residual[:, None] * inputs - self.theta_reg * theta[None, :]
        return gx, gy

    def batch_grads(self, idx: Indices, x: np.ndarray, y: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        idx = self._indices(idx)
        x, theta = self._point(x, y)
        inputs = self._inputs(idx, x)
        residual = -self.weights[idx] * (expit(inputs @ theta) - self.targets[idx])
        gx = float(np.sum(residual * self.poisoned_mask[idx])) * theta / idx.size
        gy = inputs.T @ residual / idx.size - self.theta_reg * theta
        return gx, gy

    @cached_property
    def lipschitz_L(self) -> float:
        from .streams import rng_stream
        stream = rng_stream(self.lipschitz_seed, "poison/lipschitz")
        return estimate_lipschitz(self, stream.generator, pairs=200, scale=1.0)

    def accuracy(self, theta: np.ndarray, dataset: Dataset) -> float:
        """Fraction of samples whose thresholded prediction sigmoid(z^T theta) > 0.5 matches t"""
        theta = np.asarray(theta, dtype=float)
        if not np.all(np.isfinite(theta)):
            raise ArgumentError("theta must be finite")
        binary = dataset.to_binary()
        predictions = expit(np.asarray(binary.features @ theta).ravel()) > 0.5
        return float(np.mean(predictions.astype(int) == binary.labels))

    def describe(self) -> Dict[str, Any]:
        info = super().describe()
        info.update(epsilon=self.epsilon, theta_bound=self.theta_bound, theta_reg=self.theta_reg,
                    n_poisoned=int(self.poisoned_mask.sum()))
        return info


def poison_accuracy(problem: PoisonProblem, theta: np.ndarray, dataset: Dataset) -> float:
    return problem.accuracy(theta, dataset)


def estimate_lipschitz(problem: MinimaxProblem, rng: np.random.Generator, pairs: int = 1000,
                       scale: Optional[float] = None, safety: float = LIPSCHITZ_SAFETY) -> float:
    """
    Sampled-pair estimate of the component gradient Lipschitz constant,
    max ||grad f_i(p1) - grad f_i(p2)|| / (||x1 - x2|| + ||y1 - y2||), times a safety factor.
    """
    worst = 0.0
    for _ in range(pairs):
        i = int(rng.integers(problem.n))
        x1, x2 = problem.set_x.sample(rng, scale), problem.set_x.sample(rng, scale)
        y1, y2 = problem.set_y.sample(rng, scale), problem.set_y.sample(rng, scale)
        gap = np.linalg.norm(x1 - x2) + np.linalg.norm(y1 - y2)
        if gap == 0.0:
            continue
        gx1, gy1 = problem.comp_grad_x(i, x1, y1), problem.comp_grad_y(i, x1, y1)
        gx2, gy2 = problem.comp_grad_x(i, x2, y2), problem.comp_grad_y(i, x2, y2)
        change = np.sqrt(np.sum((gx1 - gx2) ** 2) + np.sum((gy1 - gy2) ** 2))
        worst = max(worst, float(change / gap))
    estimate = safety * worst
    logger.info(f"Estimated Lipschitz constant for {problem.name}: {estimate:.6g} ({pairs} pairs)")
    return estimate


def _construct(cls, name: str, *args, **params) -> MinimaxProblem:
    try:
        return cls(*args, **params)
    except TypeError as e:
        raise ArgumentError(f"invalid {name} parameters: {e}") from None


def build_problem(name: str, params: Dict[str, Any], data_path: Optional[str] = None,
                  seed: int = 0) -> Tuple[MinimaxProblem, Dict[str, Any]]:
    """
    Construct a problem from an experiment's problem spec.

    Returns:
        (problem, extras) where extras carries side products such as the poisoning test split
    """
    from .data import gen_poison_data, load_libsvm, split_poison

    params = dict(params)
    extras: Dict[str, Any] = {}
    if data_path is not None:
        data_path = Config.data_path(data_path)
    if name == "toy_bilinear":
        problem = ToyBilinearProblem.random(
            n=int(params.pop('n', 100)), dim_x=int(params.pop('dim_x', 20)), dim_y=int(params.pop('dim_y', 10)),
            c=float(params.pop('c', 1.0)), noise=float(params.pop('noise', 0.5)),
            seed=int(params.pop('instance_seed', seed)), bound=float(params.pop('bound', 1.0)),
        )
    elif name == "robust_logistic":
        if data_path is None:
            raise ArgumentError("robust_logistic needs a LIBSVM data path")
        dataset = load_libsvm(data_path, n_features=params.pop('n_features', None),
                              max_samples=params.pop('max_samples', None), seed=int(params.pop('subsample_seed', 0)))
        problem = _construct(RobustLogisticProblem, name, dataset, **params)
        params = {}
    elif name == "poison":
        split_seed = int(params.pop('split_seed', seed))
        test_frac = float(params.pop('test_frac', 0.3))
        poison_ratio = float(params.pop('poison_ratio', 0.1))
        if data_path is not None:
            dataset = load_libsvm(data_path).to_binary()
            theta_star = None
        else:
            dataset, theta_star = gen_poison_data(int(params.pop('data_seed', seed)), n=int(params.pop('n', 1000)),
                                                  d=int(params.pop('d', 100)),
                                                  noise_var=float(params.pop('noise_var', 1e-3)),
                                                  theta_star=str(params.pop('theta_star', 'gaussian')))
        poisoned, clean, test = split_poison(dataset, split_seed, test_frac=test_frac, poison_ratio=poison_ratio)
        problem = _construct(PoisonProblem, name, poisoned, clean, **params)
        params = {}
        extras.update(test=test, theta_star=theta_star, test_frac=test_frac, poison_ratio=poison_ratio)
    else:
        raise UnsupportedProblemError(f"unknown problem: {name}")
    if params:
        raise ArgumentError(f"unknown {name} parameters: {', '.join(sorted(params))}")
    return problem, extras
