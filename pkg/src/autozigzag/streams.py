"""Seeded counter-based random streams (Philox), one per chain."""

import numpy as np


def make_rng(seed) -> np.random.Generator:
    """Generator for ``seed`` (int, SeedSequence, or an existing Generator)."""
    if isinstance(seed, np.random.Generator):
        return seed
    if not isinstance(seed, np.random.SeedSequence):
        seed = np.random.SeedSequence(seed)
    return np.random.Generator(np.random.Philox(seed))


def chain_seeds(seed, n: int) -> list:
    """Independent child seed sequences for ``n`` chains."""
    return np.random.SeedSequence(seed).spawn(n)
