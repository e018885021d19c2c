"""Seeded randomness, one independent counter-based stream per actor and round."""

from __future__ import annotations

import numpy as np

SOURCE, WORKER, MASTER, SAMPLER = 1, 2, 3, 4


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Philox stream keyed by ``(seed, *key)``.

    Distinct keys give statistically independent streams, so e.g. worker 3's
    masks in round 2 never depend on how many draws worker 2 made.
    """
    ss = np.random.SeedSequence([seed & 0xFFFFFFFFFFFFFFFF, *key])
    return np.random.Generator(np.random.Philox(ss))


def uniform_ints(rng: np.random.Generator, p: int, shape) -> np.ndarray:
    """Uniform draws from Z_p as an object array of Python ints."""
    return rng.integers(0, p, size=shape, dtype=np.int64).astype(object)
