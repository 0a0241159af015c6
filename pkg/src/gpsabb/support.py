"""Rectangular common support on the estimated GPS."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gps import GpsMatrix


class SupportError(ValueError):
    """The common-support region contains no unit."""


@dataclass
class SupportRegion:
    r_min: np.ndarray
    r_max: np.ndarray
    eligible: np.ndarray

    @property
    def n_excluded(self) -> int:
        return int(self.eligible.size - self.eligible.sum())


def common_support(gps, W, Z: int | None = None) -> SupportRegion:
    """Units whose GPS components all lie strictly inside the support box.

    For each treatment ``w`` the lower bound is the largest within-group
    minimum of ``r(w, X)`` and the upper bound is the smallest within-group
    maximum.
    """
    R = gps.R if isinstance(gps, GpsMatrix) else np.asarray(gps, dtype=float)
    W = np.asarray(W, dtype=int)
    Z = R.shape[1] if Z is None else Z
    lows = np.empty((Z, R.shape[1]))
    highs = np.empty((Z, R.shape[1]))
    for z in range(1, Z + 1):
        rows = R[W == z]
        if rows.shape[0] == 0:
            raise SupportError(f"treatment group {z} is empty")
        lows[z - 1] = rows.min(axis=0)
        highs[z - 1] = rows.max(axis=0)
    r_min = lows.max(axis=0)
    r_max = highs.min(axis=0)
    inside = (R > r_min) & (R < r_max)
    eligible = inside.all(axis=1)
    if not eligible.any():
        counts = inside.sum(axis=0)
        w = int(np.argmin(counts)) + 1
        raise SupportError(
            f"common support is empty: no unit has r({w}, X) strictly inside "
            f"({r_min[w - 1]:.6g}, {r_max[w - 1]:.6g})"
        )
    return SupportRegion(r_min=r_min, r_max=r_max, eligible=eligible)
