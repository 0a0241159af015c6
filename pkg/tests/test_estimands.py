import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gpsabb.estimands import (
    ESTIMAND_FUNCTIONS, att_log_odds_ratio, att_log_risk_ratio, att_ordinal_mean_difference,
    att_risk_difference, estimate_contrast,
)

YJ = np.array([1, 1, 1, 0, 0, 1])
YK = np.array([0, 1, 0, 0, 0, 1])


def test_risk_difference_hand_values():
    est = att_risk_difference(YJ, YK)
    d = np.array([1, 0, 1, 0, 0, 0])
    assert est.tau_hat == pytest.approx(2 / 6)
    assert est.v_hat == pytest.approx(d.var(ddof=1) / 6)


def test_log_odds_ratio_hand_values():
    est = att_log_odds_ratio(YJ, YK)  # cells 4, 2, 2, 4
    assert est.tau_hat == pytest.approx(np.log(4))
    assert est.v_hat == pytest.approx(1 / 4 + 1 / 2 + 1 / 2 + 1 / 4)
    assert not est.corrected


def test_log_risk_ratio_hand_values():
    est = att_log_risk_ratio(YJ, YK)
    assert est.tau_hat == pytest.approx(np.log(2))
    pj, pk = 4 / 6, 2 / 6
    assert est.v_hat == pytest.approx((1 - pj) / (6 * pj) + (1 - pk) / (6 * pk))


def test_zero_cell_correction():
    est = att_log_odds_ratio(np.ones(4), np.array([0, 1, 0, 0]))
    assert est.corrected
    assert est.tau_hat == pytest.approx(np.log(4.5 / 0.5) - np.log(1.5 / 3.5))


def test_ordinal_mean_difference():
    est = att_ordinal_mean_difference(np.array([3, 4, 5]), np.array([1, 2, 2]))
    assert est.tau_hat == pytest.approx(7 / 3)
    assert est.v_hat == pytest.approx(np.var([2, 2, 3], ddof=1) / 3)


def test_self_contrast_is_zero():
    c = np.column_stack([YJ, YK])
    est = estimate_contrast(c, 2, 2, "log_odds_ratio")
    assert est.tau_hat == 0.0 and est.v_hat == 0.0


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10**6), st.sampled_from(sorted(ESTIMAND_FUNCTIONS)))
def test_antisymmetry(seed, estimand):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 40))
    c = rng.integers(0, 2, size=(n, 3))
    a = estimate_contrast(c, 1, 3, estimand)
    b = estimate_contrast(c, 3, 1, estimand)
    assert a.tau_hat == -b.tau_hat
    assert a.v_hat == pytest.approx(b.v_hat, rel=1e-12)


def test_unknown_estimand():
    with pytest.raises(ValueError):
        estimate_contrast(np.zeros((3, 2)), 1, 2, "hazard_ratio")
