"""Counter-based seed derivation."""

from __future__ import annotations

import numpy as np


def seed_sequence(seed, *key: int) -> np.random.SeedSequence:
    """Independent stream for ``key`` under ``seed`` (int or SeedSequence).

    The result depends only on ``(seed, key)``, never on how many streams
    were derived before it.
    """
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + key)
    return np.random.SeedSequence(int(seed), spawn_key=key)


def generator(seed, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *key)))
