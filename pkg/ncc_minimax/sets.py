"""
Feasible sets with exact Euclidean projections.

Every set is a closed convex compact subset of R^dim. Projections are pure functions of
their input; a point that is already feasible is returned unchanged, which makes every
projection exactly idempotent.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Optional, Union

import numpy as np

from .errors import ArgumentError

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# feasibility tolerance of the simplex mass constraint after projection
SIMPLEX_TOL = 1e-12


class FeasibleSet(ABC):
    """Closed convex compact set with projection, diameter and linear maximization"""

    kind: str = "set"

    def __init__(self, dim: int):
        if dim < 1:
            raise ArgumentError(f"{self.kind} dimension must be positive, got {dim}")
        self.dim = int(dim)

    def _check(self, p: np.ndarray) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ArgumentError(f"{self.kind} expects a vector of dimension {self.dim}, got shape {p.shape}")
        return p

    @abstractmethod
    def project(self, p: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the set"""

    @abstractmethod
    def diameter(self) -> float:
        """Largest distance between two points of the set"""

    @abstractmethod
    def contains(self, p: np.ndarray, tol: float = 0.0) -> bool:
        """Membership test with absolute tolerance"""

    @abstractmethod
    def center(self) -> np.ndarray:
        """Canonical seed-independent interior point"""

    @abstractmethod
    def linear_maximizer(self, g: np.ndarray) -> np.ndarray:
        """A point of the set maximizing <g, s>"""

    @abstractmethod
    def sample(self, rng: np.random.Generator, scale: Optional[float] = None) -> np.ndarray:
        """Random feasible point; scale limits the spread of very large boxes"""

    def touches_boundary(self, p: np.ndarray) -> bool:
        return False

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim}


class Box(FeasibleSet):
    """Coordinatewise bounds lo <= p <= hi"""

    kind = "Box"

    def __init__(self, lo: ArrayLike, hi: ArrayLike, dim: Optional[int] = None):
        lo_arr = np.atleast_1d(np.asarray(lo, dtype=float))
        hi_arr = np.atleast_1d(np.asarray(hi, dtype=float))
        if dim is None:
            dim = max(lo_arr.size, hi_arr.size)
        super().__init__(dim)
        self.lo = np.broadcast_to(lo_arr, (self.dim,)).copy()
        self.hi = np.broadcast_to(hi_arr, (self.dim,)).copy()
        if not (np.all(np.isfinite(self.lo)) and np.all(np.isfinite(self.hi))):
            raise ArgumentError("Box bounds must be finite")
        if np.any(self.lo > self.hi):
            raise ArgumentError("Box requires lo <= hi in every coordinate")

    @classmethod
    def symmetric(cls, bound: float, dim: int) -> 'Box':
        return cls(-bound, bound, dim=dim)

    def project(self, p: np.ndarray) -> np.ndarray:
        p = self._check(p)
        return np.minimum(np.maximum(p, self.lo), self.hi)

    def diameter(self) -> float:
        return float(np.linalg.norm(self.hi - self.lo))

    def contains(self, p: np.ndarray, tol: float = 0.0) -> bool:
        p = self._check(p)
        return bool(np.all(p >= self.lo - tol) and np.all(p <= self.hi + tol))

    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def linear_maximizer(self, g: np.ndarray) -> np.ndarray:
        g = self._check(g)
        return np.where(g > 0, self.hi, self.lo)

    def sample(self, rng: np.random.Generator, scale: Optional[float] = None) -> np.ndarray:
        lo, hi = self.lo, self.hi
        if scale is not None:
            mid = self.center()
            lo = np.maximum(lo, mid - scale)
            hi = np.minimum(hi, mid + scale)
        return lo + (hi - lo) * rng.random(self.dim)

    def touches_boundary(self, p: np.ndarray) -> bool:
        p = self._check(p)
        return bool(np.any(p <= self.lo) or np.any(p >= self.hi))

    def normal_cone_distance(self, p: np.ndarray, g: np.ndarray) -> float:
        """Exact dist(0, g + N_Box(p)) for a feasible p"""
        p = self._check(p)
        g = self._check(g)
        at_lo = p <= self.lo
        at_hi = p >= self.hi
        residual = np.where(at_lo & at_hi, 0.0,
                            np.where(at_lo, np.minimum(g, 0.0),
                                     np.where(at_hi, np.maximum(g, 0.0), g)))
        return float(np.linalg.norm(residual))

    def describe(self) -> dict:
        info = super().describe()
        if np.all(self.lo == self.lo[0]) and np.all(self.hi == self.hi[0]):
            info.update(lo=float(self.lo[0]), hi=float(self.hi[0]))
        else:
            info.update(lo=self.lo.tolist(), hi=self.hi.tolist())
        return info


class InfBall(Box):
    """Infinity-norm ball ||p - center||_inf <= radius"""

    kind = "InfBall"

    def __init__(self, radius: float, dim: int, center: Optional[ArrayLike] = None):
        if not radius > 0:
            raise ArgumentError(f"InfBall radius must be positive, got {radius}")
        c = np.zeros(dim) if center is None else np.broadcast_to(np.asarray(center, dtype=float), (dim,))
        super().__init__(c - radius, c + radius, dim=dim)
        self.radius = float(radius)
        self.ball_center = np.array(c, dtype=float)

    def diameter(self) -> float:
        return 2.0 * self.radius * math.sqrt(self.dim)

    def describe(self) -> dict:
        return {"kind": self.kind, "dim": self.dim, "radius": self.radius,
                "center": float(self.ball_center[0]) if np.all(self.ball_center == self.ball_center[0])
                else self.ball_center.tolist()}


class Simplex(FeasibleSet):
    """Unit probability simplex {y >= 0, sum(y) = 1}"""

    kind = "Simplex"

    def project(self, p: np.ndarray) -> np.ndarray:
        p = self._check(p)
        if self.contains(p, SIMPLEX_TOL):
            return p.copy()
        # sort descending, keep the largest k with u_k - (sum_{j<=k} u_j - 1)/k > 0
        u = np.sort(p)[::-1]
        cssv = np.cumsum(u) - 1.0
        ks = np.arange(1, self.dim + 1)
        k = np.nonzero(u - cssv / ks > 0)[0][-1]
        theta = cssv[k] / (k + 1.0)
        return np.maximum(p - theta, 0.0)

    def diameter(self) -> float:
        return math.sqrt(2.0) if self.dim >= 2 else 0.0

    def contains(self, p: np.ndarray, tol: float = 0.0) -> bool:
        p = self._check(p)
        return bool(np.all(p >= -tol) and abs(float(np.sum(p)) - 1.0) <= max(tol, SIMPLEX_TOL))

    def center(self) -> np.ndarray:
        return np.full(self.dim, 1.0 / self.dim)

    def linear_maximizer(self, g: np.ndarray) -> np.ndarray:
        g = self._check(g)
        s = np.zeros(self.dim)
        s[int(np.argmax(g))] = 1.0
        return s

    def sample(self, rng: np.random.Generator, scale: Optional[float] = None) -> np.ndarray:
        return rng.dirichlet(np.ones(self.dim))


def project(feasible_set: FeasibleSet, p: np.ndarray) -> np.ndarray:
    return feasible_set.project(p)


def diameter(feasible_set: FeasibleSet) -> float:
    return feasible_set.diameter()


def stationarity_residual(feasible_set: FeasibleSet, p: np.ndarray, g: np.ndarray,
                          eta: float, exact: bool = False) -> float:
    """
    Projected-gradient residual ||p - P(p - eta g)|| / eta.

    With exact=True on a Box (or InfBall) the exact normal-cone distance
    dist(0, g + N(p)) is returned instead.
    """
    if not eta > 0:
        raise ArgumentError(f"eta must be positive, got {eta}")
    p = np.asarray(p, dtype=float)
    g = np.asarray(g, dtype=float)
    if exact:
        if not isinstance(feasible_set, Box):
            raise ArgumentError(f"exact normal-cone distance is only available for Box sets, not {feasible_set.kind}")
        return feasible_set.normal_cone_distance(p, g)
    step = feasible_set.project(p - eta * g)
    return float(np.linalg.norm(p - step) / eta)
