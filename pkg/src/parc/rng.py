"""Seeded xoshiro256** stream for fixtures that must reproduce anywhere.

numpy's Generator is used for throwaway test data, but fixture files and the
demo CLI need a stream whose byte-exact output is pinned by this module alone,
independent of numpy version.  State is seeded through splitmix64 as the
xoshiro authors prescribe, so seed 0 is safe.
"""

from __future__ import annotations

import numpy as np

_M64 = (1 << 64) - 1


def _rotl(x: int, r: int) -> int:
    return ((x << r) | (x >> (64 - r))) & _M64


def _splitmix64(state: int):
    state = (state + 0x9E3779B97F4A7C15) & _M64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
    return state, z ^ (z >> 31)


class Xoshiro256:
    """xoshiro256** with 53-bit uniform doubles in [0, 1)."""

    def __init__(self, seed: int):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        s = seed & _M64
        self._s = []
        for _ in range(4):
            s, word = _splitmix64(s)
            self._s.append(word)

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (_rotl((s1 * 5) & _M64, 7) * 9) & _M64
        t = (s1 << 17) & _M64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = _rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self) -> float:
        return (self.next_u64() >> 11) * (2.0 ** -53)

    def fill_signed(self, count: int) -> np.ndarray:
        """count doubles in [-1, 1), float64, one stream draw each."""
        out = np.empty(count, dtype=np.float64)
        for i in range(count):
            out[i] = 2.0 * self.uniform() - 1.0
        return out
