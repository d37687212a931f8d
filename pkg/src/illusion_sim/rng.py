"""Counter-based random streams (Philox4x32-10).

Every uniform used by the samplers is a pure function of
``(seed, stream, counter)``: the 64-bit seed is the Philox key, and the
128-bit Philox counter packs ``counter`` (low words) and ``stream`` (high
words). By convention the stream is the global spin id and the counter is
the number of times that spin has been updated, so a sweep schedule can be
replayed, split across chips or run on any number of workers without
changing a single draw.

Streams with the top bit set are reserved for initial-state draws.
"""
from __future__ import annotations

import numba
import numpy as np

_MASK32 = np.uint64(0xFFFFFFFF)
_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = np.uint64(0x9E3779B9)
_W1 = np.uint64(0xBB67AE85)
_S32 = np.uint64(32)
_S11 = np.uint64(11)
_INV53 = 1.0 / 9007199254740992.0

INIT_STREAM_BASE = 1 << 63


@numba.njit(cache=True, nogil=True)
def philox4x32(seed, stream, counter):
    """Raw Philox4x32-10 block for the packed key/counter.

    Returns the four 32-bit output words as ``uint64`` values.
    """
    seed = np.uint64(seed)
    stream = np.uint64(stream)
    counter = np.uint64(counter)
    c0 = counter & _MASK32
    c1 = counter >> _S32
    c2 = stream & _MASK32
    c3 = stream >> _S32
    k0 = seed & _MASK32
    k1 = seed >> _S32
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _MASK32
            k1 = (k1 + _W1) & _MASK32
        p0 = _M0 * c0
        p1 = _M1 * c2
        hi0 = p0 >> _S32
        lo0 = p0 & _MASK32
        hi1 = p1 >> _S32
        lo1 = p1 & _MASK32
        c0 = hi1 ^ c1 ^ k0
        c1 = lo1
        c2 = hi0 ^ c3 ^ k1
        c3 = lo0
    return c0, c1, c2, c3


@numba.njit(cache=True, nogil=True)
def uniform(seed, stream, counter):
    """Uniform double in [0, 1) with 53 random bits."""
    x0, x1, _, _ = philox4x32(seed, stream, counter)
    bits = ((x1 << _S32) | x0) >> _S11
    return float(bits) * _INV53


@numba.njit(cache=True, nogil=True)
def initial_spins(seed, n):
    out = np.empty(n, dtype=np.int8)
    base = np.uint64(INIT_STREAM_BASE)
    for i in range(n):
        out[i] = 1 if uniform(seed, base + np.uint64(i), 0) < 0.5 else -1
    return out


def random_state(n: int, seed: int) -> np.ndarray:
    """Deterministic random initial configuration drawn from reserved streams."""
    return initial_spins(np.uint64(seed % (1 << 64)), n)


class CounterRng:
    """Per-spin counted streams under one master seed.

    ``draw(i)`` returns the uniform for ``(seed, i, counters[i])`` and then
    increments that spin's counter. ``draws`` totals every draw handed out.
    """

    def __init__(self, seed: int, n: int, counters=None):
        self.seed = int(seed) % (1 << 64)
        self.counters = (
            np.zeros(n, dtype=np.uint64) if counters is None else np.asarray(counters, dtype=np.uint64)
        )
        if self.counters.shape != (n,):
            raise ValueError("counter vector length must equal the spin count")

    @property
    def n(self) -> int:
        return self.counters.size

    @property
    def draws(self) -> int:
        return int(self.counters.sum())

    def draw(self, i: int) -> float:
        u = uniform(np.uint64(self.seed), np.uint64(i), self.counters[i])
        self.counters[i] += np.uint64(1)
        return u

    def peek(self, i: int) -> float:
        return uniform(np.uint64(self.seed), np.uint64(i), self.counters[i])

    def copy(self) -> "CounterRng":
        return CounterRng(self.seed, self.n, self.counters.copy())
