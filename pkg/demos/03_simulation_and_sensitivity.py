"""A small simulation cell, then a sensitivity grid for an unmeasured confounder.

The cell here uses only a few replications so it finishes in about a
minute; ``gpsabb simulate --scale desk`` runs the full study.
"""

import numpy as np

from gpsabb import Dataset, RunConfig
from gpsabb.sensitivity import sensitivity_grid
from gpsabb.simlab import SimDesign, format_table, run_cell

res = run_cell(SimDesign.preset("desk", b=1.0), ("abb:1", "abb:5", "ipw", "oracle"), R=10, seed=3)
print(format_table(res))

# A dataset in which group 1 has a real, positive effect.
rng = np.random.default_rng(7)
n = 600
X = rng.standard_normal((n, 2))
W = rng.choice([1, 2, 3], size=n, p=[0.4, 0.3, 0.3])
Y = (rng.random(n) < 1 / (1 + np.exp(0.3 - 0.5 * X[:, 0] - 1.0 * (W == 1)))).astype(int)
data = Dataset(X, W, Y)

grid = [-0.9, -0.5, 0.0, 0.5, 0.9]
sens = sensitivity_grid(data, RunConfig(seed=1, reference=1), grid, grid, seed=5)
print("\nbaseline standardized effects:", np.round(sens.baseline, 2))
print("standardized effect of 1 vs 2 (rows: delta, columns: phi)")
print(np.round(sens.cells[..., 0], 2))
