import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpsabb.gps import gps_from_probabilities
from gpsabb.matching import (
    DISTANCES, MatchingError, distance, logit_covariance, match_estimate, matched_weights, nn_match,
)


def _instance(seed, n, Z=3):
    rng = np.random.default_rng(seed)
    R = rng.dirichlet(np.ones(Z) * 2, size=n)
    W = np.concatenate([np.arange(1, Z + 1), rng.integers(1, Z + 1, n - Z)])
    return gps_from_probabilities(R), W


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6), st.integers(6, 50), st.sampled_from(DISTANCES), st.integers(1, 2))
def test_with_replacement_equals_exhaustive_search(seed, n, kind, L):
    gps, W = _instance(seed, n)
    t = 1
    if min((W == w).sum() for w in (2, 3)) < L:
        return
    ms = nn_match(W, gps, t, L=L, kind=kind)
    sigma = logit_covariance(gps.logitR) if kind == "mahalanobis_logit_gps" else None
    for i, u in enumerate(ms.units):
        for w in (2, 3):
            pool = np.flatnonzero(W == w)
            d = [distance(kind, gps, u, v, w=t, sigma=sigma) for v in pool]
            expect = [pool[x] for x in sorted(range(pool.size), key=lambda x: (d[x], pool[x]))[:L]]
            assert ms.matches[w][i].tolist() == expect


def test_mahalanobis_matches_direct_formula():
    gps, W = _instance(1, 30)
    S = logit_covariance(gps.logitR)
    diff = gps.logitR[0] - gps.logitR[5]
    assert distance("mahalanobis_logit_gps", gps, 0, 5, sigma=S) == pytest.approx(
        np.sqrt(diff @ np.linalg.solve(S, diff)))


def test_ties_go_to_smallest_index():
    R = np.array([[0.5, 0.5], [0.6, 0.4], [0.4, 0.6], [0.6, 0.4]])
    gps = gps_from_probabilities(R)
    W = np.array([1, 2, 2, 2])
    ms = nn_match(W, gps, 1, kind="euclidean_gps")
    assert ms.matches[2].tolist() == [[1]]


def test_without_replacement_uses_each_donor_once():
    gps, W = _instance(3, 60)
    t = int(np.argmin(np.bincount(W)[1:])) + 1
    ms = nn_match(W, gps, t, with_replacement=False)
    for chosen in ms.matches.values():
        assert len(set(chosen.ravel())) == chosen.size


def test_without_replacement_needs_enough_donors():
    gps, W = _instance(3, 20)
    t = int(np.argmax(np.bincount(W)[1:])) + 1
    with pytest.raises(MatchingError):
        nn_match(W, gps, t, L=3, with_replacement=False)


def test_estimate_and_weights():
    R = np.array([[0.5, 0.5], [0.7, 0.3], [0.45, 0.55], [0.72, 0.28]])
    gps = gps_from_probabilities(R)
    W = np.array([1, 1, 2, 2])
    Y = np.array([1, 0, 0, 1])
    ms = nn_match(W, gps, 1, kind="euclidean_gps")
    assert ms.matches[2].ravel().tolist() == [2, 3]
    est = match_estimate(ms, Y, 1, 2)
    assert est.tau_hat == pytest.approx(0.0)
    np.testing.assert_allclose(matched_weights(ms, 4), [1, 1, 1, 1])


def test_unknown_distance():
    gps, W = _instance(0, 10)
    with pytest.raises(ValueError):
        nn_match(W, gps, 1, kind="cosine")
