"""k-means on the logit GPS with every treatment represented in every cluster."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._rng import generator
from .gps import GpsMatrix


@dataclass
class ClusterAssignment:
    assign: np.ndarray  # 1-based cluster ids
    centroids: np.ndarray
    Q_requested: int
    objective: float
    objective_trace: list = field(default_factory=list)

    @property
    def Q_eff(self) -> int:
        return self.centroids.shape[0]


def _sq_dist(V: np.ndarray, C: np.ndarray) -> np.ndarray:
    d = (V * V).sum(1)[:, None] - 2.0 * V @ C.T + (C * C).sum(1)[None, :]
    return np.maximum(d, 0.0)


def kmeans_pp_init(V: np.ndarray, Q: int, rng: np.random.Generator) -> np.ndarray:
    n = V.shape[0]
    centers = [int(rng.integers(n))]
    d2 = _sq_dist(V, V[centers])[:, 0]
    for _ in range(1, Q):
        total = d2.sum()
        if total <= 0:
            # all remaining points coincide with a center
            idx = int(rng.integers(n))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers.append(idx)
        d2 = np.minimum(d2, _sq_dist(V, V[idx : idx + 1])[:, 0])
    return V[centers].copy()


def lloyd(V: np.ndarray, C: np.ndarray, max_iter: int = 300, rtol: float = 1e-8):
    """Lloyd iterations from centroids ``C``.

    Returns ``(labels, centroids, trace)`` with 0-based labels; ``trace`` holds
    the within-cluster sum of squares after each assignment step. Empty
    clusters keep their previous centroid.
    """
    C = C.copy()
    trace = []
    labels = np.argmin(_sq_dist(V, C), axis=1)
    for _ in range(max_iter):
        for q in range(C.shape[0]):
            members = labels == q
            if members.any():
                C[q] = V[members].mean(axis=0)
        d = _sq_dist(V, C)
        new = np.argmin(d, axis=1)
        obj = float(d[np.arange(V.shape[0]), new].sum())
        trace.append(obj)
        done = np.array_equal(new, labels) or (
            len(trace) > 1 and trace[-2] - obj <= rtol * max(trace[-2], 1e-300)
        )
        labels = new
        if done:
            break
    return labels, C, trace


def _wss(V, labels, C):
    return float(((V - C[labels]) ** 2).sum())


def within_cluster_counts(assign, W, Z: int | None = None, Q: int | None = None) -> np.ndarray:
    """Table ``counts[q - 1, w - 1]`` of units of treatment ``w`` in cluster ``q``."""
    assign = np.asarray(assign, dtype=int)
    W = np.asarray(W, dtype=int)
    Z = int(W.max()) if Z is None else Z
    Q = int(assign.max()) if Q is None else Q
    counts = np.zeros((Q, Z), dtype=int)
    np.add.at(counts, (assign - 1, W - 1), 1)
    return counts


def repair(V: np.ndarray, labels: np.ndarray, W: np.ndarray, Z: int):
    """Merge clusters lacking some treatment into their nearest neighbour.

    ``labels`` are 0-based. Clusters are dropped if empty, then the violating
    cluster with the fewest units (lowest id on ties) is merged into the
    cluster whose centroid is nearest, and centroids are recomputed, until
    every cluster holds every treatment. Returns 1-based labels and centroids
    ordered by first appearance in the data.
    """
    labels = labels.copy()
    while True:
        ids = np.unique(labels)
        C = np.array([V[labels == q].mean(axis=0) for q in ids])
        counts = np.zeros((ids.size, Z), dtype=int)
        pos = np.searchsorted(ids, labels)
        np.add.at(counts, (pos, W - 1), 1)
        bad = np.flatnonzero((counts == 0).any(axis=1))
        if bad.size == 0 or ids.size == 1:
            break
        sizes = counts.sum(axis=1)
        v = bad[np.lexsort((bad, sizes[bad]))[0]]
        d = ((C - C[v]) ** 2).sum(axis=1)
        d[v] = np.inf
        target = int(np.argmin(d))
        labels[labels == ids[v]] = ids[target]
    # canonical numbering: order of first appearance
    _, first = np.unique(labels, return_index=True)
    order = np.unique(labels)[np.argsort(first)]
    remap = {int(q): i + 1 for i, q in enumerate(order)}
    out = np.array([remap[int(q)] for q in labels], dtype=int)
    cents = np.array([V[out == q].mean(axis=0) for q in range(1, len(order) + 1)])
    return out, cents


def cluster_logit_gps(
    gps,
    W,
    Q: int,
    seed: int | np.random.SeedSequence = 0,
    n_init: int = 10,
    max_iter: int = 300,
    rtol: float = 1e-8,
    Z: int | None = None,
) -> ClusterAssignment:
    """Partition units into at most ``Q`` clusters on ``logit(R)``.

    k-means++ seeding with ``n_init`` restarts; the restart with the smallest
    within-cluster sum of squares wins (earliest restart on ties). Clusters
    missing a treatment group are then merged away, so the returned
    ``Q_eff`` can be smaller than ``Q``.
    """
    V = gps.logitR if isinstance(gps, GpsMatrix) else np.asarray(gps, dtype=float)
    W = np.asarray(W, dtype=int)
    Z = int(W.max()) if Z is None else Z
    n = V.shape[0]
    if Q < 1:
        raise ValueError("Q must be at least 1")
    if Q > n:
        raise ValueError(f"Q={Q} exceeds the number of units n={n}")
    if Q == 1:
        C = V.mean(axis=0, keepdims=True)
        return ClusterAssignment(
            assign=np.ones(n, dtype=int), centroids=C, Q_requested=1,
            objective=_wss(V, np.zeros(n, dtype=int), C),
        )
    best = None
    for r in range(n_init):
        rng = generator(seed, r)
        labels, C, trace = lloyd(V, kmeans_pp_init(V, Q, rng), max_iter, rtol)
        obj = _wss(V, labels, C)
        if best is None or obj < best[0]:
            best = (obj, labels, trace)
    _, labels, trace = best
    assign, cents = repair(V, labels, W, Z)
    return ClusterAssignment(
        assign=assign, centroids=cents, Q_requested=Q,
        objective=_wss(V, assign - 1, cents), objective_trace=trace,
    )
