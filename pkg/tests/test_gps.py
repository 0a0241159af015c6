import numpy as np
import pytest
from scipy.optimize import minimize
from scipy.special import expit

from gpsabb.gps import (
    GpsFitError, design_matrix, fit_multinomial, gps_from_probabilities, gradient,
    log_likelihood, predict_gps,
)


def _instance(n=500, P=5, Z=3, seed=0):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, P))
    B = rng.normal(scale=0.5, size=(Z - 1, P + 1))
    eta = np.column_stack([design_matrix(X) @ B.T, np.zeros(n)])
    p = np.exp(eta - eta.max(1, keepdims=True))
    p /= p.sum(1, keepdims=True)
    W = np.array([rng.choice(Z, p=row) + 1 for row in p])
    return X, W


def test_intercept_only_recovers_proportions():
    # 1/6, 1/3, 1/2 of 600 units
    W = np.repeat([1, 2, 3], [100, 200, 300])
    X = np.empty((600, 0))
    model = fit_multinomial(X, W)
    R = predict_gps(model, X).R
    np.testing.assert_allclose(R[0], [1 / 6, 1 / 3, 1 / 2], atol=1e-10)


def test_binary_fit_matches_scipy_logistic():
    rng = np.random.default_rng(4)
    X = rng.standard_normal((300, 2))
    W = np.where(rng.random(300) < expit(0.3 + X @ [1.0, -0.5]), 1, 2)
    model = fit_multinomial(X, W)
    D = design_matrix(X)
    y = (W == 1).astype(float)

    def nll(b):
        e = D @ b
        return -(y * e - np.logaddexp(0, e)).sum()

    ref = minimize(nll, np.zeros(3), method="BFGS", options={"gtol": 1e-10}).x
    np.testing.assert_allclose(model.B[0], ref, atol=1e-5)


def test_gradient_matches_finite_differences():
    X, W = _instance()
    D = design_matrix(X)
    B = np.random.default_rng(1).normal(scale=0.3, size=(2, 6))
    g = gradient(B, D, W, ridge=0.1)
    h = 1e-6
    fd = np.zeros_like(B)
    for idx in np.ndindex(B.shape):
        e = np.zeros_like(B)
        e[idx] = h
        fd[idx] = (log_likelihood(B + e, D, W, 0.1) - log_likelihood(B - e, D, W, 0.1)) / (2 * h)
    np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-4)


def test_fit_converges_and_trace_increases():
    X, W = _instance()
    model = fit_multinomial(X, W)
    assert model.converged
    assert model.gradient_norm < 1e-8
    assert np.all(np.diff(model.log_likelihood_trace) >= -1e-12)


def test_label_permutation_equivariance():
    X, W = _instance(n=300, seed=2)
    perm = np.array([2, 3, 1])  # old label w -> perm[w-1]
    R1 = predict_gps(fit_multinomial(X, W), X).R
    R2 = predict_gps(fit_multinomial(X, perm[W - 1]), X).R
    np.testing.assert_allclose(R2[:, perm - 1], R1, atol=1e-7)


def test_rows_sum_to_one_and_logit_consistent():
    X, W = _instance(n=200, seed=3)
    g = predict_gps(fit_multinomial(X, W), X)
    np.testing.assert_allclose(g.R.sum(1), 1.0, atol=1e-12)
    np.testing.assert_allclose(expit(g.logitR), g.R, atol=1e-12)


def test_clamping():
    g = gps_from_probabilities(np.array([[1.0, 0.0, 0.0]]))
    assert np.all(g.R > 0) and np.all(np.isfinite(g.logitR))


def test_rank_deficient_raises():
    X, W = _instance(n=100, P=2)
    with pytest.raises(GpsFitError, match="rank"):
        fit_multinomial(np.column_stack([X, X[:, 0]]), W)


def test_separation_advises_ridge():
    x = np.linspace(-1, 1, 40).reshape(-1, 1)
    W = np.where(x[:, 0] < 0, 1, 2)
    with pytest.raises(GpsFitError, match="ridge"):
        fit_multinomial(x, W)
    model = fit_multinomial(x, W, ridge=1e-4)
    assert np.all(np.isfinite(model.B))


def test_predict_dimension_check():
    X, W = _instance(n=100, P=2)
    with pytest.raises(ValueError):
        predict_gps(fit_multinomial(X, W), X[:, :1])
