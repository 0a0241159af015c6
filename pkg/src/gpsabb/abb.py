"""Approximate Bayesian Bootstrap imputation within clusters, and pooling.

For each imputation, cluster and non-reference treatment ``w`` the donor
outcomes of ``w`` in the cluster are resampled with replacement (same size),
then the reference units of the cluster draw their ``Y(w)`` with replacement
from that resampled pool.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._rng import generator
from .cluster import within_cluster_counts


class ImputationError(ValueError):
    pass


@dataclass
class ImputedPotentialOutcomes:
    """Completed potential outcomes of the reference units.

    ``Y[m, i, w - 1]`` is the value for imputation ``m``, the ``i``-th
    reference unit (ascending data index ``units[i]``) and treatment ``w``.
    Column ``t - 1`` holds the observed outcome. ``donors`` has the same
    shape and holds the data index of the donor (the unit itself for column
    ``t - 1``).
    """

    Y: np.ndarray
    donors: np.ndarray
    units: np.ndarray
    reference: int

    @property
    def M(self) -> int:
        return self.Y.shape[0]

    def completed(self, m: int) -> np.ndarray:
        return self.Y[m]


@dataclass
class PooledEstimate:
    point: float
    se: float
    per_imputation: list = field(default_factory=list)
    n_corrected: int = 0  # imputations where a zero-cell correction fired


def abb_impute(
    Y,
    W,
    assign,
    t: int,
    M: int = 25,
    seed=0,
    Z: int | None = None,
) -> ImputedPotentialOutcomes:
    """Multiply impute the missing potential outcomes of treatment group ``t``.

    Random draws for ``(m, q, w)`` come from their own substream of
    ``seed``, so results do not depend on evaluation order.
    """
    Y = np.asarray(Y)
    W = np.asarray(W, dtype=int)
    assign = np.asarray(assign, dtype=int)
    Z = int(W.max()) if Z is None else Z
    if M < 1:
        raise ImputationError("M must be positive")
    if not np.issubdtype(Y.dtype, np.integer) and not np.all(Y == np.round(Y)):
        raise ImputationError("ABB needs a categorical (binary or ordinal) outcome")
    Q = int(assign.max())
    counts = within_cluster_counts(assign, W, Z, Q)
    if np.any(counts == 0):
        q, w = np.argwhere(counts == 0)[0]
        raise ImputationError(f"cluster {q + 1} has no unit with treatment {w + 1}")

    units = np.flatnonzero(W == t)
    pos = np.empty(W.shape[0], dtype=int)
    pos[units] = np.arange(units.size)
    out = np.empty((M, units.size, Z), dtype=Y.dtype)
    donors = np.empty((M, units.size, Z), dtype=int)
    out[:, :, t - 1] = Y[units]
    donors[:, :, t - 1] = units
    for q in range(1, Q + 1):
        in_q = assign == q
        recipients = pos[np.flatnonzero(in_q & (W == t))]
        n_t = recipients.size
        for w in range(1, Z + 1):
            if w == t:
                continue
            pool_idx = np.flatnonzero(in_q & (W == w))
            n_w = pool_idx.size
            for m in range(M):
                rng = generator(seed, m, q, w)
                stage1 = pool_idx[rng.integers(0, n_w, size=n_w)]
                stage2 = stage1[rng.integers(0, n_w, size=n_t)]
                donors[m, recipients, w - 1] = stage2
                out[m, recipients, w - 1] = Y[stage2]
    return ImputedPotentialOutcomes(Y=out, donors=donors, units=units, reference=t)


def pool(per_imputation, rubin_correction: bool = False) -> PooledEstimate:
    """Combine per-imputation ``(estimate, variance)`` pairs.

    ``se**2`` is the between-imputation variance (``M - 1`` denominator)
    plus the mean within-imputation variance. With ``rubin_correction`` the
    between term is multiplied by ``1 + 1/M``.
    """
    pairs = [(float(a), float(b)) for a, b in per_imputation]
    M = len(pairs)
    if M < 2:
        raise ValueError("pooling needs at least two imputations")
    est = np.array([p[0] for p in pairs])
    var = np.array([p[1] for p in pairs])
    if np.any(var < 0):
        raise ValueError("within-imputation variances must be non-negative")
    point = est.sum() / M
    between = ((est - point) ** 2).sum() / (M - 1)
    if rubin_correction:
        between *= 1.0 + 1.0 / M
    within = var.sum() / M
    return PooledEstimate(point=float(point), se=float(np.sqrt(between + within)), per_imputation=pairs)


def dump_imputations(imp: ImputedPotentialOutcomes, directory, labels=None) -> list[Path]:
    """Write one CSV per imputation: unit index and the completed ``Y(w)``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    Z = imp.Y.shape[2]
    labels = [str(l) for l in labels] if labels is not None else [str(w) for w in range(1, Z + 1)]
    paths = []
    for m in range(imp.M):
        path = directory / f"imputation_{m + 1:03d}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["unit"] + [f"Y({l})" for l in labels])
            for i, u in enumerate(imp.units):
                writer.writerow([int(u)] + [str(v) for v in imp.Y[m, i]])
        paths.append(path)
    return paths
