"""Counter-based uniform draws keyed by integers.

Every stochastic quantity attached to an edge is a pure function of
``(seed, edge key, stream epoch, draw index)``, so results do not depend on the
order in which edges are touched or on how replicas are scheduled.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
_M61 = (1 << 61) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_INV53 = 2.0 ** -53


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fold_key(key) -> int:
    """Reduce an edge key (int or tuple of ints) to 64 bits deterministically."""
    if isinstance(key, int):
        if 0 <= key <= MASK64:
            return key
        return mix64(key % _M61 ^ (key.bit_length() << 48))
    h = 0x243F6A8885A308D3
    for part in key:
        h = mix64(h ^ fold_key(int(part)))
    return h


def stream_key(seed: int, key, epoch: int = 0) -> int:
    """Base counter for the draws of one edge in one epoch."""
    return mix64(mix64(seed ^ (epoch * _GOLDEN)) ^ fold_key(key))


def uniform(base: int, index: int) -> float:
    """Uniform in [0, 1) for draw ``index`` of the stream ``base``."""
    z = (base + (index + 1) * _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return (z >> 11) * _INV53


def exponential(base: int, index: int, rate: float) -> float:
    return -math.log1p(-uniform(base, index)) / rate


def seed_from(rng) -> int:
    """Accept an int seed or a numpy Generator and return a 64-bit seed."""
    if rng is None:
        rng = np.random.default_rng()
    if isinstance(rng, (int, np.integer)):
        return int(rng) & MASK64
    hi, lo = rng.integers(0, 2**32, size=2, dtype=np.uint64)
    return (int(hi) << 32) | int(lo)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)
