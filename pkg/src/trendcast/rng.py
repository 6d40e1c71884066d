"""Deterministic counter-based random stream.

All seeded randomness in the toolkit (synthetic generators, network weight
initialization, dropout masks) flows through one documented scheme so that
runs are reproducible across platforms and easy to replicate elsewhere:

    u64(k)   = splitmix64(seed + (k + 1) * 0x9E3779B97F4A7C15)
    uniform  = (u64 >> 11) * 2**-53                       (in [0, 1))
    gaussian = Box-Muller on consecutive uniform pairs,
               with u1 shifted to (0, 1] so log(u1) is finite

splitmix64 is the finalizer from Vigna's SplitMix64 generator; the counter
form makes bulk generation a pure vectorized map over k = 0, 1, 2, ...
Bitwise output is stable for a fixed seed; statistical properties (not bits)
are the portability contract for reimplementations.
"""

from __future__ import annotations

import zlib

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)
_TWO_NEG53 = 2.0 ** -53


def _splitmix64(z: np.ndarray) -> np.ndarray:
    z = z.astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= _MIX1
    z ^= z >> np.uint64(27)
    z *= _MIX2
    z ^= z >> np.uint64(31)
    return z


def _mix_int(z: int) -> int:
    mask = 0xFFFFFFFFFFFFFFFF
    z &= mask
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & mask
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & mask
    z ^= z >> 31
    return z


def derive_seed(seed: int, *tags: object) -> int:
    """Fold string/int tags into a seed to get independent substreams."""
    z = seed & 0xFFFFFFFFFFFFFFFF
    for tag in tags:
        if isinstance(tag, int):
            salt = tag & 0xFFFFFFFFFFFFFFFF
        else:
            salt = zlib.crc32(str(tag).encode("utf-8"))
        z = _mix_int((z + 0x9E3779B97F4A7C15) ^ salt)
    return z


class CounterRng:
    """Stateful view over the counter stream for one seed.

    Successive calls consume consecutive counter positions, so a fixed
    call sequence reproduces bit-identical draws.
    """

    def __init__(self, seed: int):
        self.seed = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        self._pos = 0

    def _raw(self, count: int) -> np.ndarray:
        ks = np.arange(self._pos + 1, self._pos + count + 1, dtype=np.uint64)
        self._pos += count
        return _splitmix64((self.seed + ks * _GOLDEN) & _MASK)

    def uniform(self, count: int) -> np.ndarray:
        """count uniforms in [0, 1)."""
        return (self._raw(count) >> np.uint64(11)).astype(np.float64) * _TWO_NEG53

    def normal(self, count: int) -> np.ndarray:
        """count standard normals via Box-Muller."""
        pairs = (count + 1) // 2
        bits = self._raw(2 * pairs)
        # u1 in (0, 1] keeps the log finite; u2 in [0, 1)
        u1 = ((bits[:pairs] >> np.uint64(11)).astype(np.float64) + 1.0) * _TWO_NEG53
        u2 = (bits[pairs:] >> np.uint64(11)).astype(np.float64) * _TWO_NEG53
        radius = np.sqrt(-2.0 * np.log(u1))
        angle = 2.0 * np.pi * u2
        out = np.empty(2 * pairs)
        out[0::2] = radius * np.cos(angle)
        out[1::2] = radius * np.sin(angle)
        return out[:count]

    def mask(self, keep_prob: float, count: int) -> np.ndarray:
        """Bernoulli(keep_prob) 0/1 mask of length count."""
        return (self.uniform(count) < keep_prob).astype(np.float64)
