import numpy as np
import pytest

from gpsabb import Dataset


def make_dataset(n=400, P=3, Z=3, seed=0, effect=0.0, outcome_kind="binary"):
    """Small confounded instance: treatment depends on X, outcome on X (and W)."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, P))
    lp = np.column_stack([0.6 * X[:, 0] * (z - 1) - 0.3 * X[:, 1] * (z == 2) for z in range(1, Z + 1)])
    prob = np.exp(lp - lp.max(axis=1, keepdims=True))
    prob /= prob.sum(axis=1, keepdims=True)
    W = np.array([rng.choice(Z, p=p) + 1 for p in prob])
    eta = -0.2 + 0.8 * X[:, 0] + effect * (W == 1)
    if outcome_kind == "binary":
        Y = (rng.random(n) < 1 / (1 + np.exp(-eta))).astype(int)
        return Dataset(X, W, Y)
    Y = np.clip(np.round(eta + rng.standard_normal(n)) + 3, 1, 5).astype(int)
    return Dataset(X, W, Y, outcome_kind="ordinal", levels=5)


@pytest.fixture
def small_data():
    return make_dataset()


ACCEPTANCE_LINES = []


def acceptance_line(criterion, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
