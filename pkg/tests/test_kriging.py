import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from egokit.design import BoxDomain, lhs
from egokit.errors import DegenerateDesign, DimensionMismatch, DuplicatePoints
from egokit.kernel import KernelSpec, correlation_matrix
from egokit.kriging import (
    TrainingSet,
    fit,
    loo,
    mle_search,
    model_from_dict,
    model_to_dict,
    neg_log_likelihood,
    posterior_cov,
    posterior_sample,
    predict,
    refit,
)

UNIT1 = BoxDomain.unit(1)
UNIT2 = BoxDomain.unit(2)


def _cov(model, U):
    """Nugget-effect prior covariance on unit-cube points (oracle helper)."""
    R = correlation_matrix(model.spec.family, model.spec.theta, U, U)
    return model.sigma2 * (R + model.nugget * np.eye(len(U)))


def test_constant_data():
    m = fit(TrainingSet([[0.2], [0.7]], [3.0, 3.0]), KernelSpec("matern52", (0.5,)), domain=UNIT1)
    assert m.trend_mean == pytest.approx(3.0)
    assert np.allclose(m.weights, 0.0, atol=1e-12)


def test_single_point_needs_known_mean():
    with pytest.raises(DegenerateDesign):
        fit(TrainingSet([[0.2]], [1.0]), KernelSpec("matern52", (0.5,)))


def test_duplicate_points_rejected():
    with pytest.raises(DuplicatePoints):
        fit(TrainingSet([[0.2], [0.2], [0.5]], [1.0, 1.0, 2.0]), KernelSpec("matern52", (0.5,)), domain=UNIT1)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        fit(TrainingSet(np.zeros((3, 2)) + [[0, 0], [0, 1], [1, 0]], [1.0, 2.0, 3.0]), KernelSpec("matern52", (0.5,)))


def test_gls_mean_matches_explicit_inverse(rng):
    X = rng.random((5, 1))
    y = rng.normal(size=5)
    m = fit(TrainingSet(X, y), KernelSpec("matern52", (0.3,), 2.0), domain=UNIT1)
    Cinv = np.linalg.inv(_cov(m, X))
    one = np.ones(5)
    assert m.trend_mean == pytest.approx(one @ Cinv @ y / (one @ Cinv @ one), abs=1e-10)


def test_interpolates_training_points(model_2d):
    y = model_2d.training.y
    pred = predict(model_2d, model_2d.training.X)
    assert np.max(np.abs(pred.mean - y)) <= 1e-6 * np.std(y)
    assert np.all(pred.variance <= 1.1 * model_2d.nugget * model_2d.sigma2)


def test_prior_reversion_far_away(model_2d):
    far = 1e6 * np.array(model_2d.spec.lengthscales)
    p = predict(model_2d, far)
    assert p.mean == pytest.approx(model_2d.trend_mean, abs=1e-6)
    assert p.variance == pytest.approx(model_2d.sigma2 * (1 + model_2d.nugget), rel=1e-6)


def test_single_observation_known_mean():
    spec = KernelSpec("matern52", (0.4,), 1.7)
    m = fit(TrainingSet([[0.3]], [2.0]), spec, known_mean=0.0, domain=UNIT1)
    rho = correlation_matrix("matern52", (0.4,), np.array([[0.55]]), np.array([[0.3]]))[0, 0]
    p = predict(m, [0.55])
    assert p.mean == pytest.approx(rho * 2.0, rel=1e-7)
    assert p.variance == pytest.approx(1.7 * (1 - rho**2), rel=1e-7)


def test_predict_matches_explicit_conditioning(model_2d, rng):
    x0 = rng.random((4, 2))
    U = np.vstack([model_2d.unit_X, x0])
    C = _cov(model_2d, U)
    n = len(model_2d.training)
    K, k = C[:n, :n], C[:n, n:]
    # ordinary Kriging with GLS mean, no trend-variance term
    mean = model_2d.trend_mean + k.T @ np.linalg.solve(K, model_2d.training.y - model_2d.trend_mean)
    var = np.diag(C[n:, n:]) - np.einsum("ij,ij->j", k, np.linalg.solve(K, k))
    p = predict(model_2d, x0)
    assert np.allclose(p.mean, mean, atol=1e-9)
    assert np.allclose(p.variance, var, atol=1e-9)


def test_nll_permutation_invariant(rng):
    X = rng.random((12, 2))
    y = rng.normal(size=12)
    spec = KernelSpec("matern52", (0.3, 0.6))
    perm = rng.permutation(12)
    a = neg_log_likelihood(TrainingSet(X, y), spec, domain=UNIT2)
    b = neg_log_likelihood(TrainingSet(X[perm], y[perm]), spec, domain=UNIT2)
    assert a == pytest.approx(b, abs=1e-10)


def test_nll_matches_explicit_density():
    X = np.array([[0.1], [0.45], [0.9]])
    y = np.array([1.0, -0.5, 2.0])
    spec = KernelSpec("matern52", (0.35,))
    R = correlation_matrix("matern52", (0.35,), X, X) + 1e-8 * np.eye(3)
    Ri = np.linalg.inv(R)
    one = np.ones(3)
    mu = one @ Ri @ y / (one @ Ri @ one)
    r = y - mu
    s2 = r @ Ri @ r / 3
    C = s2 * R
    oracle = 0.5 * (3 * np.log(2 * np.pi) + np.log(np.linalg.det(C)) + r @ np.linalg.inv(C) @ r)
    assert neg_log_likelihood(TrainingSet(X, y), spec, domain=UNIT1) == pytest.approx(oracle, abs=1e-9)


@pytest.mark.parametrize("c", [3.0, -0.25, 1e3])
def test_nll_scaling_identity(c, rng):
    X = rng.random((10, 2))
    y = rng.normal(size=10)
    spec = KernelSpec("gaussian", (0.4, 0.4))
    a = neg_log_likelihood(TrainingSet(X, y), spec, domain=UNIT2)
    b = neg_log_likelihood(TrainingSet(X, c * y), spec, domain=UNIT2)
    assert b - a == pytest.approx(10 * np.log(abs(c)), abs=1e-8)


def test_mle_constant_data_is_degenerate(rng):
    X = rng.random((15, 2))
    with pytest.raises(DegenerateDesign):
        mle_search(TrainingSet(X, np.full(15, 4.0)), seed=0, domain=UNIT2)


def test_mle_beats_every_start(rng):
    X = lhs(25, UNIT2, 4).points
    y = np.sin(5 * X[:, 0]) * np.cos(2 * X[:, 1])
    res = mle_search(TrainingSet(X, y), seed=1, domain=UNIT2)
    assert np.all(res.nll <= res.start_nll + 1e-12)
    assert res.nll == pytest.approx(neg_log_likelihood(TrainingSet(X, y), res.spec, domain=UNIT2), abs=1e-9)


def test_mle_deterministic():
    X = lhs(15, UNIT2, 2).points
    y = X[:, 0] ** 2 - X[:, 1]
    a = mle_search(TrainingSet(X, y), seed=3, domain=UNIT2).spec
    b = mle_search(TrainingSet(X, y), seed=3, domain=UNIT2).spec
    assert a == b


def test_mle_needs_enough_points(rng):
    with pytest.raises(DegenerateDesign):
        mle_search(TrainingSet(rng.random((6, 2)), rng.normal(size=6)), domain=UNIT2)


@pytest.mark.parametrize("known_mean", [None, 0.5])
def test_loo_matches_refit(known_mean, rng):
    X = rng.random((20, 2))
    y = np.sin(4 * X[:, 0]) + X[:, 1]
    m = fit(TrainingSet(X, y), KernelSpec("matern52", (0.3, 0.5), 0.8), known_mean, UNIT2)
    lv = loo(m)
    for i in range(20):
        sub = fit(m.training.without(i), m.spec, known_mean, UNIT2, nugget=m.nugget)
        p = predict(sub, X[i])
        assert lv.loo_mean[i] == pytest.approx(p.mean, abs=1e-8)
        assert lv.loo_sd[i] == pytest.approx(np.sqrt(p.variance), abs=1e-8)


def test_loo_near_duplicates_have_small_sd():
    X = np.array([[0.1], [0.4], [0.4 + 1e-6], [0.8], [0.95]])
    y = np.array([0.0, 1.0, 1.0 + 1e-7, -0.5, 0.2])
    m = fit(TrainingSet(X, y), KernelSpec("matern52", (0.3,)), domain=UNIT1)
    sd = loo(m).loo_sd
    assert max(sd[1], sd[2]) < 1e-3 * np.sqrt(m.sigma2)
    assert min(sd[0], sd[3], sd[4]) > 0.1 * np.sqrt(m.sigma2)


def test_loo_two_points():
    X, y = np.array([[0.2], [0.6]]), np.array([1.0, 3.0])
    spec = KernelSpec("matern52", (0.5,))
    lv = loo(fit(TrainingSet(X, y), spec, domain=UNIT1))
    # with one point left, the GLS trend equals it and the prediction is flat
    assert lv.loo_mean[0] == pytest.approx(3.0)
    lvk = loo(fit(TrainingSet(X, y), spec, known_mean=0.0, domain=UNIT1))
    one = fit(TrainingSet(X[1:], y[1:]), spec, known_mean=0.0, domain=UNIT1)
    assert lvk.loo_mean[0] == pytest.approx(predict(one, X[0]).mean, rel=1e-7)


def test_posterior_cov_single_point(model_2d):
    x = np.array([[0.33, 0.71]])
    assert posterior_cov(model_2d, x)[0, 0] == pytest.approx(predict(model_2d, x[0]).variance, rel=1e-12)


def test_posterior_cov_at_training_points(model_2d):
    C = posterior_cov(model_2d, model_2d.training.X)
    assert np.all(np.abs(C) <= 1.1 * model_2d.nugget * model_2d.sigma2)


def test_posterior_cov_block_conditioning(model_2d, rng):
    Xn = rng.random((3, 2))
    U = np.vstack([model_2d.unit_X, Xn])
    C = _cov(model_2d, U)
    n = len(model_2d.training)
    oracle = C[n:, n:] - C[n:, :n] @ np.linalg.solve(C[:n, :n], C[:n, n:])
    assert np.allclose(posterior_cov(model_2d, Xn), oracle, atol=1e-10)


def test_posterior_sample_at_data(model_2d):
    S = posterior_sample(model_2d, model_2d.training.X, 50, seed=1)
    assert np.max(np.abs(S - model_2d.training.y)) <= 1e-3 * np.std(model_2d.training.y)


def test_posterior_sample_moments(model_2d, rng):
    Xn = rng.random((4, 2))
    S = posterior_sample(model_2d, Xn, 10_000, seed=9)
    p = predict(model_2d, Xn)
    assert np.all(np.abs(S.mean(axis=0) - p.mean) <= 4 * np.sqrt(p.variance) / 100)
    C = posterior_cov(model_2d, Xn)
    assert np.linalg.norm(np.cov(S.T) - C) <= 0.05 * np.linalg.norm(C)


def test_posterior_sample_deterministic(model_2d):
    X = [[0.1, 0.2], [0.5, 0.5]]
    assert np.array_equal(posterior_sample(model_2d, X, 10, 4), posterior_sample(model_2d, X, 10, 4))


def test_model_dict_round_trip(model_2d):
    back = model_from_dict(model_to_dict(model_2d), model_2d.training)
    x = np.array([[0.3, 0.3], [0.9, 0.1]])
    assert np.array_equal(predict(back, x).mean, predict(model_2d, x).mean)


def test_refit_keeps_parameters(model_2d):
    m = refit(model_2d, model_2d.training.append([0.5, 0.51], 0.7))
    assert m.spec == model_2d.spec and len(m.training) == 21
    assert predict(m, [0.5, 0.51]).mean == pytest.approx(0.7, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 40), st.integers(1, 4), st.integers(0, 10_000), st.sampled_from(["matern52", "gaussian", "exponential"]))
def test_interpolation_property(n, d, seed, family):
    rng = np.random.default_rng(seed)
    dom = BoxDomain.unit(d)
    X = lhs(n, dom, seed).points
    y = rng.normal(size=n) * 10 ** rng.uniform(-3, 3)
    m = fit(TrainingSet(X, y), KernelSpec(family, tuple(rng.uniform(0.05, 3, d)), 1.0), domain=dom)
    p = predict(m, X)
    assert np.max(np.abs(p.mean - y)) <= 1e-6 * max(np.std(y), 1e-300)
    assert np.all(p.variance >= 0)
