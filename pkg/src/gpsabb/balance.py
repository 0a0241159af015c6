"""Standardized pairwise bias of covariate means across treatment groups.

The scale of covariate ``p`` is its standard deviation over all units of the
pre-adjustment sample, pooled across groups. The same scale is reused for
clustered and matched samples so before/after values are comparable.
"""

from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass

import numpy as np

ADEQUACY_THRESHOLD = 0.20


@dataclass
class BalanceReport:
    sb: dict  # (j, k) -> array of SB_p
    max2sb: np.ndarray
    context: str
    covariate_names: tuple = ()

    @property
    def maxmax2sb(self) -> float:
        return float(self.max2sb.max())

    def rows(self):
        """Plot-ready ``(covariate, context, Max2SB)`` rows."""
        names = self.covariate_names or tuple(f"x{p + 1}" for p in range(self.max2sb.size))
        return [(names[p], self.context, float(v)) for p, v in enumerate(self.max2sb)]

    @property
    def n_above_threshold(self) -> int:
        return int((self.max2sb > ADEQUACY_THRESHOLD).sum())


def pooled_sd(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return X.std(axis=0, ddof=1)


def _group_means(X, W, weights, z):
    mask = W == z
    if weights is None:
        return X[mask].mean(axis=0)
    w = weights[mask]
    return (X[mask] * w[:, None]).sum(axis=0) / w.sum()


def _sb_all_pairs(X, W, scale, weights=None, groups=None):
    groups = np.unique(W) if groups is None else groups
    means = {int(z): _group_means(X, W, weights, z) for z in groups}
    safe = np.where(scale > 0, scale, 1.0)
    out = {}
    for j, k in itertools.combinations(sorted(means), 2):
        out[(j, k)] = np.where(scale > 0, (means[j] - means[k]) / safe, 0.0)
    return out


def _check_scale(scale):
    if np.any(scale <= 0):
        warnings.warn("covariate with zero pooled SD; its standardized bias is set to 0",
                      RuntimeWarning)


def standardized_bias(X, W, p: int, j: int, k: int, scale: float | None = None) -> float:
    """Standardized difference in means of covariate ``p`` (0-based) between ``j`` and ``k``."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    W = np.asarray(W, dtype=int)
    s = pooled_sd(X[:, p])[0] if scale is None else float(scale)
    if s <= 0:
        _check_scale(np.array([s]))
        return 0.0
    return float((X[W == j, p].mean() - X[W == k, p].mean()) / s)


def _report(sb: dict, context: str, names) -> BalanceReport:
    stack = np.abs(np.array(list(sb.values())))
    return BalanceReport(sb=sb, max2sb=stack.max(axis=0), context=context, covariate_names=tuple(names))


def max2sb(X, W, scale=None, weights=None, context: str = "raw", covariate_names=()) -> BalanceReport:
    """Max over treatment pairs of |SB| per covariate.

    ``weights`` gives unit multiplicities (matched samples).
    """
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=int)
    scale = pooled_sd(X) if scale is None else np.asarray(scale, dtype=float)
    _check_scale(scale)
    if weights is not None:
        weights = np.asarray(weights, dtype=float)
        keep = weights > 0
        X, W, weights = X[keep], W[keep], weights[keep]
    if np.unique(W).size < 2:
        raise ValueError("balance needs at least two treatment groups")
    return _report(_sb_all_pairs(X, W, scale, weights), context, covariate_names)


def weighted_cluster_balance(X, W, assign, scale=None, covariate_names=()) -> BalanceReport:
    """Within-cluster SBs combined with weights ``n_q / n``."""
    X = np.asarray(X, dtype=float)
    W = np.asarray(W, dtype=int)
    assign = np.asarray(assign, dtype=int)
    scale = pooled_sd(X) if scale is None else np.asarray(scale, dtype=float)
    _check_scale(scale)
    groups = np.unique(W)
    n = W.size
    combined = None
    for q in np.unique(assign):
        m = assign == q
        sb_q = _sb_all_pairs(X[m], W[m], scale, groups=groups)
        frac = m.sum() / n
        if combined is None:
            combined = {key: frac * v for key, v in sb_q.items()}
        else:
            for key, v in sb_q.items():
                combined[key] = combined[key] + frac * v
    return _report(combined, "within_cluster_weighted", covariate_names)
