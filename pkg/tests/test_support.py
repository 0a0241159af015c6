import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpsabb.support import SupportError, common_support


def _oracle(R, W, Z):
    lo = np.max([R[W == z].min(axis=0) for z in range(1, Z + 1)], axis=0)
    hi = np.min([R[W == z].max(axis=0) for z in range(1, Z + 1)], axis=0)
    keep = []
    for i in range(R.shape[0]):
        keep.append(all(lo[w] < R[i, w] < hi[w] for w in range(Z)))
    return lo, hi, np.array(keep)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 4), st.integers(12, 60))
def test_matches_direct_oracle(seed, Z, n):
    rng = np.random.default_rng(seed)
    R = rng.dirichlet(np.ones(Z), size=n)
    W = np.concatenate([np.arange(1, Z + 1), rng.integers(1, Z + 1, n - Z)])
    lo, hi, keep = _oracle(R, W, Z)
    if not keep.any():
        with pytest.raises(SupportError):
            common_support(R, W, Z)
        return
    region = common_support(R, W, Z)
    np.testing.assert_array_equal(region.r_min, lo)
    np.testing.assert_array_equal(region.r_max, hi)
    np.testing.assert_array_equal(region.eligible, keep)


def test_boundary_units_are_excluded():
    R = np.array([[0.2, 0.8], [0.5, 0.5], [0.8, 0.2], [0.3, 0.7], [0.6, 0.4], [0.45, 0.55]])
    W = np.array([1, 1, 1, 2, 2, 2])
    region = common_support(R, W)
    # r(1) box is (0.3, 0.6): units at 0.3 and 0.6 sit on the edge
    assert region.eligible.tolist() == [False, True, False, False, False, True]
    assert region.n_excluded == 4


def test_empty_support_names_coordinate():
    R = np.array([[0.9, 0.1], [0.8, 0.2], [0.1, 0.9], [0.2, 0.8]])
    W = np.array([1, 1, 2, 2])
    with pytest.raises(SupportError, match=r"r\(\d, X\)"):
        common_support(R, W)
