"""Deterministic random streams built on SplitMix64.

Every random draw in this package flows through this module so that all
artifacts (datasets, projections, embeddings, noise, weight inits) are
bit-reproducible from 64-bit seeds, independent of numpy's own generators.

Stream layout, fixed by contract:

* output k of a stream seeded with s is ``mix64(s + (k+1) * GOLDEN)`` where
  ``mix64`` is the SplitMix64 finalizer; this makes the stream a pure
  function of (seed, index) and lets blocks be produced vectorized,
* a uniform consumes one 64-bit output and lies strictly inside (0, 1),
* a standard-normal draw consumes exactly two consecutive 64-bit outputs
  (u1, u2) and is the Box-Muller cosine branch; the sine partner is never
  used, so normal j always maps to outputs (2j, 2j+1).

Scalar and vectorized paths are guaranteed to produce identical streams.
"""

from __future__ import annotations

import math

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15

_TWO53 = float(1 << 53)


def mix64(x: int) -> int:
    """SplitMix64 finalizer: a 64-bit bijective avalanche mix."""
    z = x & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash of a byte string."""
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


class SplitMix64:
    """Counter-based SplitMix64 stream of u64 / uniform / normal draws."""

    def __init__(self, seed: int):
        self.seed = seed & MASK64
        self._index = 0  # number of u64 outputs consumed so far

    def next_u64(self) -> int:
        self._index += 1
        return mix64((self.seed + self._index * GOLDEN) & MASK64)

    def u64_block(self, n: int) -> np.ndarray:
        """Next n raw outputs as a uint64 array; advances the stream by n."""
        idx = np.arange(self._index + 1, self._index + n + 1, dtype=np.uint64)
        self._index += n
        z = (np.uint64(self.seed) + idx * np.uint64(GOLDEN)) & np.uint64(MASK64)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        return z ^ (z >> np.uint64(31))

    def uniform(self) -> float:
        """One uniform draw in the open interval (0, 1)."""
        return ((self.next_u64() >> 11) + 0.5) / _TWO53

    def uniforms(self, n: int) -> np.ndarray:
        """Next n uniforms in (0, 1) as float64; same stream as n uniform() calls."""
        bits = self.u64_block(n) >> np.uint64(11)
        return (bits.astype(np.float64) + 0.5) / _TWO53

    def normal(self) -> float:
        """One standard-normal draw (Box-Muller cosine branch, 2 u64 consumed)."""
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)

    def normals(self, n: int) -> np.ndarray:
        """Next n standard normals as float64; same stream as n normal() calls."""
        u = self.uniforms(2 * n).reshape(n, 2)
        return np.sqrt(-2.0 * np.log(u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound) via rejection-free 128-bit multiply."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        return (self.next_u64() * bound) >> 64

    def shuffled(self, items):
        """Fisher-Yates shuffle of a sequence, returned as a new list."""
        out = list(items)
        for i in range(len(out) - 1, 0, -1):
            j = self.next_below(i + 1)
            out[i], out[j] = out[j], out[i]
        return out
