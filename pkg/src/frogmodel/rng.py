"""Reproducible per-trial random streams.

Trial ``i`` of a run seeded with ``master_seed`` always draws from
``stream(master_seed, i)``, so results do not depend on how trials are
scheduled across workers.

The derivation is fixed and documented here so other implementations can
reproduce it::

    derive(seed, i) = splitmix64(splitmix64(seed mod 2**64) XOR (i mod 2**64))

where ``splitmix64`` is the standard finalizer (Steele, Lea & Flood) applied
after adding the golden-ratio increment ``0x9E3779B97F4A7C15``.  The 64-bit
result seeds a PCG64 bit generator.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    z = (x + 0x9E3779B97F4A7C15) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive(master_seed: int, index: int) -> int:
    return splitmix64(splitmix64(master_seed & _MASK) ^ (index & _MASK))


def stream(master_seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(derive(master_seed, index)))
