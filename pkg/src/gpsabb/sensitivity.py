"""Sensitivity of ABB estimates to an unmeasured confounder.

A synthetic covariate ``xi ~ Normal(delta * Y + phi * 1{W != t}, 1)`` is added
to the data, the whole ABB analysis is rerun with it, and the standardized
effect ``tau / SE`` of each reference contrast is recorded over a grid of
``(delta, phi)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import generator
from .io import Dataset, RunConfig
from .pipeline import default_reference, run_analysis

DEFAULT_GRID = tuple(np.round(np.linspace(-0.9, 0.9, 9), 10))


@dataclass
class SensitivityGrid:
    delta_values: np.ndarray
    phi_values: np.ndarray
    contrasts: list  # (t, w) pairs
    cells: np.ndarray  # (n_delta, n_phi, n_contrasts); NaN where a cell failed
    baseline: np.ndarray  # (n_contrasts,)
    errors: dict = field(default_factory=dict)

    def rows(self):
        """``(delta, phi, contrast, standardized effect)`` records."""
        out = []
        for a, d in enumerate(self.delta_values):
            for b, p in enumerate(self.phi_values):
                for c, con in enumerate(self.contrasts):
                    out.append((float(d), float(p), con, float(self.cells[a, b, c])))
        return out


def inject_confounder(data: Dataset, t: int, delta: float, phi: float, seed) -> Dataset:
    """Copy of ``data`` with the synthetic confounder appended as column ``xi``."""
    if data.outcome_kind != "binary":
        raise ValueError("the sensitivity model needs a binary outcome")
    rng = seed if isinstance(seed, np.random.Generator) else generator(seed)
    mean = delta * data.Y + phi * (data.W != t)
    xi = mean + rng.standard_normal(data.n)
    return data.with_covariate(xi, "xi")


def standardized_effects(report, t: int, Z: int, estimand: str) -> np.ndarray:
    """``tau / SE`` for contrasts ``(t, w)``, ``w != t``, in increasing ``w``."""
    by_pair = {(r.j, r.k): r for r in report.contrasts if r.estimand == estimand}
    out = []
    for w in range(1, Z + 1):
        if w == t:
            continue
        r = by_pair[(min(t, w), max(t, w))]
        sign = 1.0 if t < w else -1.0
        out.append(sign * r.point / r.se if r.se > 0 else np.nan)
    return np.array(out)


def sensitivity_grid(
    data: Dataset,
    config: RunConfig,
    delta_grid=DEFAULT_GRID,
    phi_grid=DEFAULT_GRID,
    seed: int = 0,
) -> SensitivityGrid:
    """Standardized ABB effects with ``xi`` included, per ``(delta, phi)`` cell.

    ``xi`` for cell ``(a, b)`` is drawn from substream ``(seed, a, b)``; the ABB
    analysis in every cell uses ``config.seed``, and so does the baseline
    (no ``xi``) analysis.
    """
    delta_grid = np.asarray(delta_grid, dtype=float)
    phi_grid = np.asarray(phi_grid, dtype=float)
    for g in (delta_grid, phi_grid):
        if np.any(np.abs(g) >= 1):
            raise ValueError("grid values must lie strictly inside (-1, 1)")
    if config.method != "abb":
        config = replace(config, method="abb")
    t = config.reference or default_reference(data)
    config = replace(config, reference=t)
    estimand = config.estimands[0]
    contrasts = [(t, w) for w in range(1, data.Z + 1) if w != t]
    baseline = standardized_effects(run_analysis(data, config).report, t, data.Z, estimand)
    cells = np.full((delta_grid.size, phi_grid.size, len(contrasts)), np.nan)
    errors = {}
    for a, d in enumerate(delta_grid):
        for b, p in enumerate(phi_grid):
            try:
                aug = inject_confounder(data, t, d, p, generator(seed, a, b))
                rep = run_analysis(aug, config).report
                cells[a, b] = standardized_effects(rep, t, data.Z, estimand)
            except Exception as exc:  # reported per cell, the grid still completes
                errors[(float(d), float(p))] = f"{type(exc).__name__}: {exc}"
    return SensitivityGrid(delta_grid, phi_grid, contrasts, cells, baseline, errors)
