"""Per-replicate seed derivation.

Replicate ``i`` of an experiment always draws from
``replicate_rng(master, i)``, whatever the worker count or scheduling.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """64-bit seed for replicate ``index`` under ``master``.

    The master is mixed once and then walked along the Weyl sequence with an
    odd increment, so distinct indices below 2**64 never collide.
    """
    if master < 0 or index < 0:
        raise ValueError("master and index must be nonnegative")
    return mix64(mix64(master) + GOLDEN_GAMMA * (index + 1))


def replicate_rng(master: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive_seed(master, index)))
