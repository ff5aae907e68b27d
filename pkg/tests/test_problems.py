import numpy as np
import pytest

from conftest import numerical_grad
from ncc_minimax.data import gen_poison_data, split_poison
from ncc_minimax.errors import ArgumentError, UnsupportedProblemError
from ncc_minimax.problems import (PoisonProblem, RobustLogisticProblem, ToyBilinearProblem, build_problem,
                                  estimate_lipschitz)
from ncc_minimax.sets import stationarity_residual


def _random_point(problem, seed=0):
    rng = np.random.default_rng(seed)
    return problem.set_x.sample(rng, 1.0), problem.set_y.sample(rng, 1.0)


def _assert_gradients(problem, x, y, rtol=1e-5, atol=1e-6):
    gx, gy = problem.grads(x, y)
    assert np.allclose(gx, numerical_grad(lambda u: problem.value(u, y), x), rtol=rtol, atol=atol)
    assert np.allclose(gy, numerical_grad(lambda u: problem.value(x, u), y), rtol=rtol, atol=atol)


def test_toy_gradients_match_finite_differences(toy):
    _assert_gradients(toy, *_random_point(toy))


def test_component_means_recover_batch_gradients(toy):
    x, y = _random_point(toy, 1)
    batch = np.array([0, 3, 7, 11])
    gx, gy = toy.component_grads(batch, x, y)
    bx, by = toy.batch_grads(batch, x, y)
    assert np.allclose(gx.mean(axis=0), bx) and np.allclose(gy.mean(axis=0), by)
    assert np.mean(toy.component_values(toy.all_indices, x, y)) == pytest.approx(toy.value(x, y))


def test_toy_exact_primal_dominates_every_dual_point(toy):
    x, _ = _random_point(toy, 2)
    rng = np.random.default_rng(2)
    primal = toy.exact_primal(x)
    for _ in range(20):
        assert toy.value(x, toy.set_y.sample(rng)) <= primal + 1e-12
    vertex = np.zeros(toy.dim_y)
    vertex[np.argmax(toy.A.T @ x)] = 1.0
    assert toy.value(x, vertex) == pytest.approx(primal)


def test_toy_closed_form_inner_minimizer_is_stationary(toy):
    x, y = _random_point(toy, 3)
    r = 2.0 * toy.lipschitz_L
    x_min = toy.argmin_x_closed_form(y, x, r)
    gradient = toy.grad_x(x_min, y) + r * (x_min - x)
    assert stationarity_residual(toy.set_x, x_min, gradient, 1.0, exact=True) <= 1e-10
    with pytest.raises(ArgumentError):
        toy.argmin_x_closed_form(y, x, 0.5 * toy.c)


def test_toy_lipschitz_is_the_mean_spectral_norm(toy):
    assert toy.lipschitz_L == pytest.approx(np.linalg.norm(toy.A, 2) + toy.c)
    assert toy.lipschitz_L <= toy.component_lipschitz
    estimate = estimate_lipschitz(toy, np.random.default_rng(0), pairs=300)
    assert 0.0 < estimate <= 1.5 * toy.component_lipschitz + 1e-9


def test_toy_generator_normalizes_the_mean_matrix():
    problem = ToyBilinearProblem.random(n=100, dim_x=20, dim_y=10, c=0.5, seed=3)
    assert np.linalg.norm(problem.A, 2) == pytest.approx(1.0)
    assert problem.lipschitz_L == pytest.approx(1.5)
    deviations = [np.linalg.norm(a - problem.A, 2) for a in problem.A_components]
    assert 0.25 < float(np.median(deviations)) < 0.75


def test_index_and_shape_validation(toy):
    x, y = toy.initial_point()
    with pytest.raises(ArgumentError):
        toy.component_grads([toy.n], x, y)
    with pytest.raises(ArgumentError):
        toy.component_grads([], x, y)
    with pytest.raises(ArgumentError):
        toy.grads(np.zeros(toy.dim_x + 1), y)


def test_initial_point_is_projected_zero_and_simplex_center(toy):
    x0, y0 = toy.initial_point()
    assert np.array_equal(x0, np.zeros(toy.dim_x))
    assert np.allclose(y0, 1.0 / toy.dim_y)


def test_robust_logistic_value_and_gradients(logistic):
    x, y = _random_point(logistic, 4)
    expected = float(y @ logistic.losses(x)) + logistic.regularizer(x)
    assert logistic.value(x, y) == pytest.approx(expected)
    assert np.allclose(logistic.grad_y(x, y), logistic.losses(x))
    _assert_gradients(logistic, x, y)


def test_robust_logistic_component_y_gradients_are_compact(logistic):
    x, y = _random_point(logistic, 5)
    batch = np.array([2, 9])
    _, gy = logistic.component_grads(batch, x, y)
    assert gy.shape == (2,)
    dense = logistic.dense_y_rows(batch, gy)
    assert dense.shape == (2, logistic.n)
    assert dense[0, 2] == gy[0] and dense[1, 9] == gy[1]
    assert np.count_nonzero(dense) <= 2


def test_robust_logistic_exact_primal(logistic):
    x, _ = _random_point(logistic, 6)
    assert logistic.exact_primal(x) == pytest.approx(np.max(logistic.losses(x)) + logistic.regularizer(x))


def test_dual_regularized_primal_is_the_maximum(logistic):
    problem = RobustLogisticProblem(logistic.dataset, lam2=1e-2, dual_reg=True, lam1=1e-3)
    x, _ = _random_point(problem, 7)
    rng = np.random.default_rng(7)
    primal = problem.exact_primal(x)
    for _ in range(50):
        assert problem.value(x, problem.set_y.sample(rng)) <= primal + 1e-10
    _assert_gradients(problem, x, problem.set_y.sample(rng))


@pytest.fixture
def poison():
    dataset, theta_star = gen_poison_data(seed=0, n=200, d=5)
    poisoned, clean, test = split_poison(dataset, seed=0)
    return PoisonProblem(poisoned, clean), test, theta_star


def test_poison_value_splits_into_both_subsets(poison):
    problem, _, _ = poison
    x, theta = _random_point(problem, 8)
    poisoned = problem.poisoned_mask == 1

    def mean_cross_entropy(features, targets):
        u = features @ theta
        return np.mean(np.logaddexp(0.0, u) - targets * u)

    expected = -(mean_cross_entropy(problem.features[poisoned] + x, problem.targets[poisoned])
                 + mean_cross_entropy(problem.features[~poisoned], problem.targets[~poisoned]))
    assert problem.value(x, theta) == pytest.approx(expected)
    _assert_gradients(problem, x, theta)


def test_poison_accuracy_of_the_planted_model(poison):
    problem, test, theta_star = poison
    assert problem.accuracy(theta_star, test) > 0.95
    with pytest.raises(ArgumentError):
        problem.accuracy(np.full(test.d, np.nan), test)


def test_build_problem_toy_and_errors():
    problem, extras = build_problem("toy_bilinear", {"n": 8, "dim_x": 3, "dim_y": 2}, seed=1)
    assert isinstance(problem, ToyBilinearProblem)
    assert (problem.n, problem.dim_x, problem.dim_y) == (8, 3, 2)
    assert extras == {}
    with pytest.raises(ArgumentError):
        build_problem("toy_bilinear", {"m": 3})
    with pytest.raises(ArgumentError):
        build_problem("robust_logistic", {})
    with pytest.raises(UnsupportedProblemError):
        build_problem("matrix_game", {})


def test_build_problem_poison_returns_test_split():
    problem, extras = build_problem("poison", {"n": 200, "d": 5}, seed=3)
    assert isinstance(problem, PoisonProblem)
    assert problem.n == 140
    assert extras["test"].n == 60
    assert extras["theta_star"].shape == (5,)
    assert (extras["test_frac"], extras["poison_ratio"]) == (0.3, 0.1)


@pytest.fixture
def poison_problem(poison):
    return poison[0]


@pytest.mark.parametrize("name", ["toy", "logistic", "poison_problem"])
def test_gradients_match_finite_differences_at_many_points(name, request):
    problem = request.getfixturevalue(name)
    for seed in range(200):
        _assert_gradients(problem, *_random_point(problem, seed))


@pytest.mark.parametrize("name, bound", [
    ("toy", lambda problem: problem.lipschitz_L),
    ("logistic", lambda problem: problem.assumption_lipschitz()),
    ("poison_problem", lambda problem: problem.assumption_lipschitz()),
])
def test_sampled_gradient_ratios_stay_below_the_lipschitz_constant(name, bound, request):
    problem = request.getfixturevalue(name)
    rng = np.random.default_rng(21)
    worst = 0.0
    for _ in range(1000):
        x1, x2 = problem.set_x.sample(rng, 1.0), problem.set_x.sample(rng, 1.0)
        y1, y2 = problem.set_y.sample(rng, 1.0), problem.set_y.sample(rng, 1.0)
        g1, g2 = np.concatenate(problem.grads(x1, y1)), np.concatenate(problem.grads(x2, y2))
        worst = max(worst, np.linalg.norm(g1 - g2) / (np.linalg.norm(x1 - x2) + np.linalg.norm(y1 - y2)))
    assert 0.0 < worst <= bound(problem)
    assert problem.describe()["assumption_lipschitz"] == pytest.approx(problem.assumption_lipschitz())
