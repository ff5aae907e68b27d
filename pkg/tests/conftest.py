import numpy as np
import pytest

from ncc_minimax.data import Dataset
from ncc_minimax.models import SolverConfig
from ncc_minimax.problems import RobustLogisticProblem, ToyBilinearProblem


@pytest.fixture(autouse=True)
def _no_seed_override(monkeypatch):
    monkeypatch.delenv("NCC_SEED", raising=False)


@pytest.fixture
def toy():
    return ToyBilinearProblem.random(n=20, dim_x=4, dim_y=3, seed=0)


@pytest.fixture
def logistic():
    rng = np.random.default_rng(0)
    features = rng.normal(size=(30, 5))
    labels = np.where(rng.random(30) < 0.5, -1, 1)
    return RobustLogisticProblem(Dataset(features, labels), lam2=1e-2, alpha=10.0)


@pytest.fixture
def explicit_config():
    """Solver config with hand-picked steps large enough for the iterates to move"""
    def build(problem, scheme, **overrides):
        L = problem.lipschitz_L
        params = dict(scheme=scheme, eta_x=0.05 / L, eta_y=0.05 / L, rho=0.1, r=2.0 * L, T=30, trace_every=10)
        params.update(overrides)
        return SolverConfig(**params)
    return build


@pytest.fixture
def toy_experiment(tmp_path):
    return {
        "problem": {"name": "toy_bilinear", "params": {"n": 20, "dim_x": 4, "dim_y": 3}},
        "solvers": [
            {"scheme": "pvr", "T": 20, "batch_size": 4, "eta_x": 0.01, "eta_y": 0.01, "rho": 0.1},
            {"scheme": "stocgda", "T": 20, "batch_size": 4},
        ],
        "seeds": [0, 1],
        "trace_every": 5,
        "output_dir": str(tmp_path / "runs"),
    }


def numerical_grad(fun, p, h=1e-6):
    p = np.asarray(p, dtype=float)
    grad = np.zeros_like(p)
    for k in range(p.size):
        e = np.zeros_like(p)
        e[k] = h
        grad[k] = (fun(p + e) - fun(p - e)) / (2 * h)
    return grad
