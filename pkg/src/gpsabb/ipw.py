"""Inverse probability weighting for the ATT among reference-group units."""

from __future__ import annotations

import numpy as np

from .estimands import ContrastEstimate
from .gps import GpsMatrix


class WeightingError(ValueError):
    pass


def att_weights(gps: GpsMatrix, W, t: int, truncate: float | None = None) -> np.ndarray:
    """Weight ``r(t, X) / r(W_i, X)`` for every unit.

    ``truncate`` caps weights at that quantile of the weights (off by default).
    """
    W = np.asarray(W, dtype=int)
    R = gps.R
    wts = R[:, t - 1] / R[np.arange(W.size), W - 1]
    if truncate is not None:
        wts = np.minimum(wts, np.quantile(wts, truncate))
    return wts


def weighted_arm_mean(Y, wts, mask):
    """Ratio-weighted mean and its linearized variance (weights held fixed)."""
    y = np.asarray(Y, dtype=float)[mask]
    w = wts[mask]
    total = w.sum()
    if not total > 0:
        raise WeightingError("zero total weight in an arm")
    mu = float((w * y).sum() / total)
    var = float((w * w * (y - mu) ** 2).sum() / total**2)
    return mu, var


def ipw_att(
    Y,
    W,
    gps: GpsMatrix,
    t: int,
    j: int,
    k: int,
    estimand: str = "risk_difference",
    truncate: float | None = None,
) -> ContrastEstimate:
    """Weighted contrast ``j`` vs ``k`` for the population receiving ``t``.

    The variance sums the two arms' linearized variances and does not
    propagate uncertainty from estimating the GPS. Ratio estimands use the
    delta method on the arm means.
    """
    W = np.asarray(W, dtype=int)
    if j == k:
        return ContrastEstimate(j, k, estimand, 0.0, 0.0)
    wts = att_weights(gps, W, t, truncate)
    mj, vj = weighted_arm_mean(Y, wts, W == j)
    mk, vk = weighted_arm_mean(Y, wts, W == k)
    if estimand in ("risk_difference", "mean_difference"):
        return ContrastEstimate(j, k, estimand, mj - mk, vj + vk)
    if estimand == "log_risk_ratio":
        tau = np.log(mj) - np.log(mk)
        return ContrastEstimate(j, k, estimand, float(tau), vj / mj**2 + vk / mk**2)
    if estimand == "log_odds_ratio":
        tau = np.log(mj / (1 - mj)) - np.log(mk / (1 - mk))
        v = vj / (mj * (1 - mj)) ** 2 + vk / (mk * (1 - mk)) ** 2
        return ContrastEstimate(j, k, estimand, float(tau), float(v))
    raise ValueError(f"unknown estimand {estimand!r}")
