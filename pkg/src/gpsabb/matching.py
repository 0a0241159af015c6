"""Nearest-neighbour matching on GPS distances.

The default (Mahalanobis distance on the logit GPS, with replacement, one
match per group) is the usual multi-treatment GPS matching baseline.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .estimands import ContrastEstimate, estimate_contrast
from .gps import GpsMatrix

DISTANCES = ("linear_gps", "euclidean_gps", "mahalanobis_logit_gps")
RIDGE = 1e-8


class MatchingError(ValueError):
    pass


@dataclass
class MatchSet:
    """``matches[w][i]`` are the ``L`` donor indices for reference unit ``units[i]``."""

    units: np.ndarray
    matches: dict
    reference: int
    L: int
    with_replacement: bool
    distance_kind: str


def logit_covariance(logitR: np.ndarray) -> np.ndarray:
    """Sample covariance of the logit GPS, ridge-repaired when near singular."""
    S = np.atleast_2d(np.cov(logitR, rowvar=False))
    eig = np.linalg.eigvalsh(S)
    if eig[0] <= RIDGE * max(eig[-1], 1.0):
        warnings.warn("logit GPS covariance is near singular; adding a ridge", RuntimeWarning)
        S = S + RIDGE * np.eye(S.shape[0])
    return S


def pairwise_distance(
    kind: str,
    gps: GpsMatrix,
    rows_a,
    rows_b,
    w: int | None = None,
    sigma: np.ndarray | None = None,
) -> np.ndarray:
    """Distances between units ``rows_a`` and ``rows_b`` (a matrix)."""
    if kind == "linear_gps":
        if w is None:
            raise ValueError("linear_gps distance needs a treatment component w")
        a = gps.logitR[rows_a, w - 1]
        b = gps.logitR[rows_b, w - 1]
        return np.abs(a[:, None] - b[None, :])
    if kind == "euclidean_gps":
        A, B = gps.R[rows_a], gps.R[rows_b]
    elif kind == "mahalanobis_logit_gps":
        if sigma is None:
            sigma = logit_covariance(gps.logitR)
        Lc = np.linalg.cholesky(sigma)
        # whitened coordinates: x -> Lc^{-1} x
        A = np.linalg.solve(Lc, gps.logitR[rows_a].T).T
        B = np.linalg.solve(Lc, gps.logitR[rows_b].T).T
    else:
        raise ValueError(f"unknown distance {kind!r}; expected one of {DISTANCES}")
    d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
    return np.sqrt(d2)


def distance(kind: str, gps: GpsMatrix, i: int, j: int, w: int | None = None, sigma=None) -> float:
    """Distance between units ``i`` and ``j``."""
    return float(pairwise_distance(kind, gps, [i], [j], w=w, sigma=sigma)[0, 0])


def _nearest(d_row: np.ndarray, L: int, available: np.ndarray | None = None) -> np.ndarray:
    idx = np.arange(d_row.size)
    if available is not None:
        idx = idx[available]
        d_row = d_row[available]
    # ties broken by smaller donor index
    order = np.lexsort((idx, d_row))
    return idx[order[:L]]


def nn_match(
    W,
    gps: GpsMatrix,
    t: int,
    L: int = 1,
    kind: str = "mahalanobis_logit_gps",
    with_replacement: bool = True,
    component: int | None = None,
    Z: int | None = None,
) -> MatchSet:
    """1:L nearest-neighbour matching of every reference unit in every other group.

    Without replacement, reference units are processed in ascending index
    order and a donor is used at most once per group. ``component`` selects
    the GPS coordinate for ``linear_gps`` (default: the reference ``t``).
    """
    W = np.asarray(W, dtype=int)
    Z = int(W.max()) if Z is None else Z
    units = np.flatnonzero(W == t)
    sigma = logit_covariance(gps.logitR) if kind == "mahalanobis_logit_gps" else None
    comp = t if component is None else component
    matches = {}
    for w in range(1, Z + 1):
        if w == t:
            continue
        pool = np.flatnonzero(W == w)
        if not with_replacement and pool.size < L * units.size:
            raise MatchingError(
                f"group {w} has {pool.size} units; {L * units.size} needed without replacement"
            )
        if pool.size < L:
            raise MatchingError(f"group {w} has fewer than L={L} units")
        D = pairwise_distance(kind, gps, units, pool, w=comp, sigma=sigma)
        chosen = np.empty((units.size, L), dtype=int)
        if with_replacement:
            for i in range(units.size):
                chosen[i] = pool[_nearest(D[i], L)]
        else:
            free = np.ones(pool.size, dtype=bool)
            for i in range(units.size):
                pick = _nearest(D[i], L, free)
                free[pick] = False
                chosen[i] = pool[pick]
        matches[w] = chosen
    return MatchSet(units, matches, t, L, with_replacement, kind)


def completed_outcomes(matchset: MatchSet, Y, Z: int) -> np.ndarray:
    """``(n_t, Z)`` table: own outcome for ``t``, mean of the matches otherwise."""
    Y = np.asarray(Y, dtype=float)
    out = np.empty((matchset.units.size, Z))
    out[:, matchset.reference - 1] = Y[matchset.units]
    for w, chosen in matchset.matches.items():
        out[:, w - 1] = Y[chosen].mean(axis=1)
    return out


def match_estimate(matchset: MatchSet, Y, j: int, k: int, estimand: str = "risk_difference",
                   Z: int | None = None) -> ContrastEstimate:
    """Contrast from the matched completion.

    The variance treats matched differences as independent, ignoring the
    dependence created by reused donors.
    """
    Z = max(max(matchset.matches, default=1), matchset.reference) if Z is None else Z
    return estimate_contrast(completed_outcomes(matchset, Y, Z), j, k, estimand)


def matched_weights(matchset: MatchSet, n: int) -> np.ndarray:
    """Multiplicity of every unit in the matched sample (reference units count once)."""
    wts = np.zeros(n)
    wts[matchset.units] += 1.0
    for chosen in matchset.matches.values():
        np.add.at(wts, chosen.ravel(), 1.0 / matchset.L)
    return wts
