import numpy as np
import pytest

from conftest import make_dataset
from gpsabb import RunConfig
from gpsabb.sensitivity import (
    DEFAULT_GRID, inject_confounder, sensitivity_grid, standardized_effects,
)
from gpsabb.pipeline import run_analysis


def test_default_grid():
    assert len(DEFAULT_GRID) == 9
    assert DEFAULT_GRID[0] == -0.9 and DEFAULT_GRID[-1] == 0.9


def test_inject_confounder_mean_structure():
    data = make_dataset(n=4000, seed=1)
    aug = inject_confounder(data, 1, 0.8, -0.5, seed=3)
    xi = aug.X[:, -1]
    assert aug.covariate_names[-1] == "xi"
    expected = 0.8 * data.Y + -0.5 * (data.W != 1)
    assert np.mean(xi - expected) == pytest.approx(0.0, abs=0.05)
    assert np.var(xi - expected) == pytest.approx(1.0, rel=0.1)


def test_ordinal_outcome_rejected():
    data = make_dataset(seed=2, outcome_kind="ordinal")
    with pytest.raises(ValueError):
        inject_confounder(data, 1, 0.5, 0.5, seed=0)


def test_standardized_effects_sign():
    data = make_dataset(seed=3)
    rep = run_analysis(data, RunConfig(seed=1, reference=2, M=5)).report
    eff = standardized_effects(rep, 2, 3, "risk_difference")
    by = {(r.j, r.k): r.point / r.se for r in rep.contrasts}
    assert eff[0] == pytest.approx(-by[(1, 2)])
    assert eff[1] == pytest.approx(by[(2, 3)])


def test_grid_shape_and_rejects_out_of_range():
    data = make_dataset(seed=4)
    cfg = RunConfig(seed=2, reference=1, M=5, Q=3)
    g = sensitivity_grid(data, cfg, [-0.5, 0.5], [0.0], seed=1)
    assert g.cells.shape == (2, 1, 2)
    assert len(g.rows()) == 4
    assert not g.errors
    with pytest.raises(ValueError):
        sensitivity_grid(data, cfg, [1.0], [0.0])
