"""Per-dataset ATT contrasts and their sampling variances.

Each function takes the completed potential outcomes ``y_j`` and ``y_k`` of
the reference units (one entry per unit) and returns a
:class:`ContrastEstimate`. Binary outcomes may be fractional (e.g. averages
over several matches); counts are then sums.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HALF = 0.5


@dataclass(frozen=True)
class ContrastEstimate:
    j: int
    k: int
    estimand: str
    tau_hat: float
    v_hat: float
    corrected: bool = False


def _diff_stats(y_j, y_k):
    d = np.asarray(y_j, dtype=float) - np.asarray(y_k, dtype=float)
    n = d.size
    if n < 2:
        raise ValueError("at least two reference units are needed for a variance")
    return float(d.mean()), float(d.var(ddof=1) / n)


def att_risk_difference(y_j, y_k, j: int = 0, k: int = 0) -> ContrastEstimate:
    tau, v = _diff_stats(y_j, y_k)
    return ContrastEstimate(j, k, "risk_difference", tau, v)


def att_ordinal_mean_difference(y_j, y_k, j: int = 0, k: int = 0) -> ContrastEstimate:
    """Difference in mean level, levels treated as integers."""
    tau, v = _diff_stats(y_j, y_k)
    return ContrastEstimate(j, k, "mean_difference", tau, v)


def _cells(y_j, y_k):
    n = float(np.asarray(y_j).size)
    a = float(np.sum(y_j))
    c = float(np.sum(y_k))
    cells = np.array([a, n - a, c, n - c])
    corrected = bool(np.any(cells <= 0))
    if corrected:
        cells = cells + HALF
    return cells, corrected


def att_log_odds_ratio(y_j, y_k, j: int = 0, k: int = 0) -> ContrastEstimate:
    """Log odds ratio of success under ``j`` vs ``k``.

    Adds 0.5 to all four cells when any of them is empty.
    """
    (a, b, c, d), corrected = _cells(y_j, y_k)
    tau = np.log(a / b) - np.log(c / d)
    v = 1 / a + 1 / b + 1 / c + 1 / d
    return ContrastEstimate(j, k, "log_odds_ratio", float(tau), float(v), corrected)


def att_log_risk_ratio(y_j, y_k, j: int = 0, k: int = 0) -> ContrastEstimate:
    (a, b, c, d), corrected = _cells(y_j, y_k)
    nj, nk = a + b, c + d
    pj, pk = a / nj, c / nk
    tau = np.log(pj) - np.log(pk)
    v = (1 - pj) / (nj * pj) + (1 - pk) / (nk * pk)
    return ContrastEstimate(j, k, "log_risk_ratio", float(tau), float(v), corrected)


ESTIMAND_FUNCTIONS = {
    "risk_difference": att_risk_difference,
    "log_odds_ratio": att_log_odds_ratio,
    "log_risk_ratio": att_log_risk_ratio,
    "mean_difference": att_ordinal_mean_difference,
}

BINARY_ONLY = ("risk_difference", "log_odds_ratio", "log_risk_ratio")


def estimate_contrast(completed: np.ndarray, j: int, k: int, estimand: str) -> ContrastEstimate:
    """Contrast ``j`` vs ``k`` from a completed ``(n_t, Z)`` outcome table."""
    try:
        fn = ESTIMAND_FUNCTIONS[estimand]
    except KeyError:
        raise ValueError(f"unknown estimand {estimand!r}") from None
    if j == k:
        return ContrastEstimate(j, k, estimand, 0.0, 0.0)
    return fn(completed[:, j - 1], completed[:, k - 1], j, k)
