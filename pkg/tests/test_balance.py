import numpy as np
import pytest

from gpsabb.balance import (
    ADEQUACY_THRESHOLD, max2sb, pooled_sd, standardized_bias, weighted_cluster_balance,
)


def test_standardized_bias_hand_value():
    X = np.array([[1.0], [3.0], [2.0], [6.0]])
    W = np.array([1, 1, 2, 2])
    s = np.std([1, 3, 2, 6], ddof=1)
    assert standardized_bias(X, W, 0, 1, 2) == pytest.approx((2 - 4) / s)
    assert standardized_bias(X, W, 0, 2, 1) == pytest.approx((4 - 2) / s)


def test_max2sb_takes_max_over_pairs():
    X = np.array([[0.0, 1.0], [1.0, 1.0], [2.0, 0.0], [3.0, 0.0], [4.0, 1.0], [5.0, 1.0]])
    W = np.array([1, 1, 2, 2, 3, 3])
    rep = max2sb(X, W)
    s = pooled_sd(X)
    assert rep.max2sb[0] == pytest.approx(4 / s[0])
    assert rep.max2sb[1] == pytest.approx(1 / s[1])
    assert rep.maxmax2sb == pytest.approx(rep.max2sb.max())
    assert [r[0] for r in rep.rows()] == ["x1", "x2"]


def test_weights_change_means():
    X = np.array([[0.0], [2.0], [1.0], [1.0]])
    W = np.array([1, 1, 2, 2])
    s = pooled_sd(X)
    rep = max2sb(X, W, scale=s, weights=np.array([3.0, 1.0, 1.0, 1.0]))
    assert rep.max2sb[0] == pytest.approx(abs(0.5 - 1.0) / s[0])
    assert max2sb(X, W).maxmax2sb == pytest.approx(0.0)


def test_within_cluster_weighting():
    X = np.array([[0.0], [1.0], [10.0], [12.0]])
    W = np.array([1, 2, 1, 2])
    assign = np.array([1, 1, 2, 2])
    s = pooled_sd(X)
    rep = weighted_cluster_balance(X, W, assign, s)
    assert rep.max2sb[0] == pytest.approx((0.5 * 1 + 0.5 * 2) / s[0])
    assert rep.context == "within_cluster_weighted"


def test_zero_sd_gives_zero_with_warning():
    X = np.array([[1.0, 0.0], [1.0, 1.0], [1.0, 3.0], [1.0, 2.0]])
    W = np.array([1, 1, 2, 2])
    with pytest.warns(RuntimeWarning):
        rep = max2sb(X, W)
    assert rep.max2sb[0] == 0.0


def test_threshold_count():
    X = np.column_stack([np.r_[0, 0, 1, 1], np.r_[0, 1, 0, 1]]).astype(float)
    W = np.array([1, 1, 2, 2])
    assert max2sb(X, W).n_above_threshold == 1
    assert ADEQUACY_THRESHOLD == 0.2
