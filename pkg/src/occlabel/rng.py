"""Counter-based SplitMix64 random streams.

Draw ``i`` (0-based) of stream ``(seed, stream)`` is::

    key  = mix64(seed ^ (stream * 0xD1B54A32D192ED03))
    x_i  = mix64(key + (i + 1) * 0x9E3779B97F4A7C15)        (mod 2**64)
    mix64(z): z ^= z >> 30; z *= 0xBF58476D1CE4E5B9
              z ^= z >> 27; z *= 0x94D049BB133111EB
              z ^= z >> 31

Uniform doubles are ``(x >> 11) * 2**-53`` in [0, 1). Normals use
Box-Muller on consecutive uniform pairs ``(u1, u2)``:
``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``. Everything is plain uint64
arithmetic, so the streams reproduce bit-for-bit in any language.
"""

from __future__ import annotations

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
STREAM_MUL = np.uint64(0xD1B54A32D192ED03)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)


def mix64(z: np.ndarray) -> np.ndarray:
    z = np.asarray(z, dtype=np.uint64).copy()
    with np.errstate(over="ignore"):
        z ^= z >> np.uint64(30)
        z *= MIX1
        z ^= z >> np.uint64(27)
        z *= MIX2
        z ^= z >> np.uint64(31)
    return z


class CounterRNG:
    """Stateful cursor over one counter-based stream."""

    def __init__(self, seed: int, stream: int = 0):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self.stream = int(stream) & 0xFFFFFFFFFFFFFFFF
        with np.errstate(over="ignore"):
            base = np.uint64(self.seed) ^ (np.uint64(self.stream) * STREAM_MUL)
        self.key = mix64(np.array([base]))[0]
        self.counter = 0

    def raw(self, n: int) -> np.ndarray:
        i = np.arange(self.counter + 1, self.counter + 1 + n, dtype=np.uint64)
        self.counter += n
        with np.errstate(over="ignore"):
            return mix64(self.key + i * GOLDEN)

    def uniform(self, n: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        u = (self.raw(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53
        return low + (high - low) * u

    def normal(self, n: int, sigma: float = 1.0) -> np.ndarray:
        u = self.uniform(2 * n).reshape(n, 2)
        r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))
        return sigma * r * np.cos(2.0 * np.pi * u[:, 1])


def sample_without_replacement(n: int, k: int, seed: int, stream: int = 0) -> np.ndarray:
    """Ascending indices of ``min(k, n)`` items drawn uniformly from ``range(n)``.

    Each item gets one uniform key; the ``k`` smallest keys win (ties by index).
    """
    if k >= n:
        return np.arange(n)
    keys = CounterRNG(seed, stream).raw(n)
    order = np.argsort(keys, kind="stable")
    return np.sort(order[:k])
