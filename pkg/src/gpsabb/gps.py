"""Generalized propensity scores from a multinomial logistic regression.

The last treatment is the reference category: its linear predictor is fixed
at zero, so the coefficient matrix has ``Z - 1`` rows of ``P + 1`` entries
(intercept first).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .io import Dataset

PROB_CLAMP = 1e-12


class GpsFitError(RuntimeError):
    """The multinomial model could not be fitted."""


@dataclass
class GpsModel:
    B: np.ndarray
    converged: bool
    final_log_likelihood: float
    iterations: int
    gradient_norm: float
    ridge: float = 0.0
    log_likelihood_trace: list = field(default_factory=list)

    @property
    def Z(self) -> int:
        return self.B.shape[0] + 1

    @property
    def P(self) -> int:
        return self.B.shape[1] - 1


@dataclass
class GpsMatrix:
    R: np.ndarray
    logitR: np.ndarray

    @property
    def n(self) -> int:
        return self.R.shape[0]

    def subset(self, mask) -> "GpsMatrix":
        return GpsMatrix(self.R[mask], self.logitR[mask])


def design_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return np.column_stack([np.ones(X.shape[0]), X])


def _linear_predictors(D: np.ndarray, B: np.ndarray) -> np.ndarray:
    eta = np.zeros((D.shape[0], B.shape[0] + 1))
    eta[:, :-1] = D @ B.T
    return eta


def log_likelihood(B: np.ndarray, D: np.ndarray, W: np.ndarray, ridge: float = 0.0) -> float:
    """Penalized multinomial log-likelihood; ``W`` is 1-based."""
    eta = _linear_predictors(D, B)
    ll = eta[np.arange(D.shape[0]), W - 1].sum() - logsumexp(eta, axis=1).sum()
    return float(ll - ridge * np.sum(B * B))


def gradient(B: np.ndarray, D: np.ndarray, W: np.ndarray, ridge: float = 0.0) -> np.ndarray:
    eta = _linear_predictors(D, B)
    prob = np.exp(eta - logsumexp(eta, axis=1, keepdims=True))
    T = np.zeros_like(prob)
    T[np.arange(D.shape[0]), W - 1] = 1.0
    return (T - prob)[:, :-1].T @ D - 2.0 * ridge * B


def _hessian(prob: np.ndarray, D: np.ndarray, ridge: float) -> np.ndarray:
    # Negative Hessian, blocks ordered (category, coefficient).
    K = prob.shape[1] - 1
    p = prob[:, :K]
    nP = D.shape[1]
    H = np.empty((K, nP, K, nP))
    for a in range(K):
        for b in range(a, K):
            w = p[:, a] * ((a == b) - p[:, b])
            blk = (D * w[:, None]).T @ D
            H[a, :, b, :] = blk
            H[b, :, a, :] = blk.T
    H = H.reshape(K * nP, K * nP)
    H[np.diag_indices_from(H)] += 2.0 * ridge
    return H


def _separating(B, D, W, ll, spread: float = 30.0) -> bool:
    """True when the likelihood does not drop along the ray through ``B``.

    At a proper interior optimum, doubling the coefficients always lowers
    the likelihood. Only checked once fitted log-odds get extreme.
    """
    eta = _linear_predictors(D, B)
    if np.ptp(eta, axis=1).max() < spread:
        return False
    return log_likelihood(2.0 * B, D, W) >= ll - 1e-8 * max(1.0, abs(ll))


def fit_multinomial(
    X: np.ndarray,
    W: np.ndarray,
    Z: int | None = None,
    ridge: float = 0.0,
    max_iter: int = 200,
    tol: float = 1e-8,
    max_coef_norm: float = 1e4,
) -> GpsModel:
    """Maximum likelihood fit by Newton-Raphson with step halving.

    Falls back to a gradient step when the Hessian solve fails. Convergence
    is declared when the max-norm of the gradient drops below ``tol``.
    """
    W = np.asarray(W, dtype=int)
    Z = int(W.max()) if Z is None else Z
    D = design_matrix(X)
    n, nP = D.shape
    if n < Z:
        raise GpsFitError(f"need at least Z={Z} units, got {n}")
    if ridge == 0.0 and np.linalg.matrix_rank(D) < nP:
        raise GpsFitError("design matrix (intercept + covariates) is rank deficient")

    B = np.zeros((Z - 1, nP))
    # Start from the marginal proportions.
    counts = np.bincount(W, minlength=Z + 1)[1:].astype(float)
    if np.all(counts > 0):
        B[:, 0] = np.log(counts[:-1] / counts[-1])
    ll = log_likelihood(B, D, W, ridge)
    trace = [ll]
    gnorm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        eta = _linear_predictors(D, B)
        prob = np.exp(eta - logsumexp(eta, axis=1, keepdims=True))
        T = np.zeros_like(prob)
        T[np.arange(n), W - 1] = 1.0
        g = (T - prob)[:, :-1].T @ D - 2.0 * ridge * B
        gnorm = float(np.max(np.abs(g)))
        if gnorm < tol:
            it -= 1
            break
        try:
            step = np.linalg.solve(_hessian(prob, D, ridge), g.ravel()).reshape(B.shape)
            if not np.all(np.isfinite(step)):
                raise np.linalg.LinAlgError
        except np.linalg.LinAlgError:
            step = g / max(n, 1)
        s = 1.0
        while True:
            B_new = B + s * step
            ll_new = log_likelihood(B_new, D, W, ridge)
            if ll_new >= ll or s < 1e-10:
                break
            s *= 0.5
        if ll_new < ll:
            # no ascent possible along this direction; numerically at the optimum
            break
        B, ll = B_new, ll_new
        trace.append(ll)
        if np.linalg.norm(B) > max_coef_norm:
            raise GpsFitError(
                "coefficient norm diverging (quasi-separation); refit with a ridge penalty, "
                "e.g. ridge=1e-4"
            )
    if ridge == 0.0 and _separating(B, D, W, ll):
        raise GpsFitError(
            "fitted probabilities saturate along a separating direction (quasi-separation); "
            "refit with a ridge penalty, e.g. ridge=1e-4"
        )
    g = gradient(B, D, W, ridge)
    gnorm = float(np.max(np.abs(g)))
    converged = gnorm < tol
    if not converged and gnorm > 1e-6 * max(1.0, n):
        raise GpsFitError(f"no convergence after {it} iterations (gradient max-norm {gnorm:.3g})")
    return GpsModel(
        B=B, converged=converged, final_log_likelihood=ll, iterations=it,
        gradient_norm=gnorm, ridge=ridge, log_likelihood_trace=trace,
    )


def fit_gps(data: Dataset, ridge: float = 0.0, max_iter: int = 200, tol: float = 1e-8) -> GpsModel:
    """Fit the GPS model with an intercept and every covariate of ``data``."""
    return fit_multinomial(data.X, data.W, data.Z, ridge=ridge, max_iter=max_iter, tol=tol)


def gps_from_probabilities(R: np.ndarray) -> GpsMatrix:
    """Clamp, renormalize and attach the logit transform."""
    R = np.clip(np.asarray(R, dtype=float), PROB_CLAMP, 1.0 - PROB_CLAMP)
    R = R / R.sum(axis=1, keepdims=True)
    Rc = np.clip(R, PROB_CLAMP, 1.0 - PROB_CLAMP)
    return GpsMatrix(R=R, logitR=np.log(Rc) - np.log1p(-Rc))


def predict_gps(model: GpsModel, data) -> GpsMatrix:
    """Assignment probabilities for every unit of ``data`` (a Dataset or matrix)."""
    X = data.X if isinstance(data, Dataset) else np.asarray(data, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    if X.shape[1] != model.P:
        raise ValueError(f"model has {model.P} covariates, data has {X.shape[1]}")
    eta = _linear_predictors(design_matrix(X), model.B)
    return gps_from_probabilities(np.exp(eta - logsumexp(eta, axis=1, keepdims=True)))
