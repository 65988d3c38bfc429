"""Counter-based random streams.

Every matrix entry (i, j) draws from Philox4x32-10 keyed by a 64-bit seed with
counter (i, j, stream, 0), so an entry's value never depends on generation
order. Trial seeds are derived the same way from (master_seed, trial_index).
"""

from __future__ import annotations

import numpy as np

_M0 = np.uint64(0xD2511F53)
_M1 = np.uint64(0xCD9E8D57)
_W0 = 0x9E3779B9
_W1 = 0xBB67AE85
_MASK32 = np.uint64(0xFFFFFFFF)
_SHIFT32 = np.uint64(32)

# stream tags keep entry draws and seed derivation in disjoint counter spaces
ENTRY_STREAM = 0
SEED_STREAM = 0x5EED


def philox4x32(counter, key, rounds: int = 10):
    """Vectorised Philox4x32 block function.

    ``counter`` is a sequence of four uint32-valued arrays (broadcastable),
    ``key`` a pair of Python ints. Returns four uint64 arrays holding 32-bit
    output words.
    """
    c0, c1, c2, c3 = (np.asarray(c, dtype=np.uint64) & _MASK32 for c in counter)
    c0, c1, c2, c3 = np.broadcast_arrays(c0, c1, c2, c3)
    k0 = int(key[0]) & 0xFFFFFFFF
    k1 = int(key[1]) & 0xFFFFFFFF
    for _ in range(rounds):
        p0 = c0 * _M0
        p1 = c2 * _M1
        hi0, lo0 = p0 >> _SHIFT32, p0 & _MASK32
        hi1, lo1 = p1 >> _SHIFT32, p1 & _MASK32
        c0 = hi1 ^ c1 ^ np.uint64(k0)
        c1 = lo1
        c2 = hi0 ^ c3 ^ np.uint64(k1)
        c3 = lo0
        k0 = (k0 + _W0) & 0xFFFFFFFF
        k1 = (k1 + _W1) & 0xFFFFFFFF
    return c0, c1, c2, c3


def _key(seed: int) -> tuple[int, int]:
    s = int(seed) & 0xFFFFFFFFFFFFFFFF
    return s & 0xFFFFFFFF, s >> 32


def _to_unit(w0, w1):
    # 53 random bits, offset by half an ulp so the result lies in (0, 1)
    bits = ((w0 >> np.uint64(5)) << np.uint64(26)) | (w1 >> np.uint64(6))
    return (bits.astype(np.float64) + 0.5) * 2.0**-53


def uniform_grid(seed: int, rows: int, cols: int, stream: int = ENTRY_STREAM) -> np.ndarray:
    """Uniform (0,1) matrix where entry (i, j) is a function of (seed, i, j) only."""
    i = np.arange(rows, dtype=np.uint64)[:, None]
    j = np.arange(cols, dtype=np.uint64)[None, :]
    w0, w1, _, _ = philox4x32((i, j, stream, 0), _key(seed))
    return _to_unit(w0, w1)


def uniform_rows(seed: int, row_start: int, row_stop: int, cols: int) -> np.ndarray:
    """Rows ``row_start:row_stop`` of :func:`uniform_grid` without building the rest."""
    i = np.arange(row_start, row_stop, dtype=np.uint64)[:, None]
    j = np.arange(cols, dtype=np.uint64)[None, :]
    w0, w1, _, _ = philox4x32((i, j, ENTRY_STREAM, 0), _key(seed))
    return _to_unit(w0, w1)


def derive_seed(master_seed: int, index: int) -> int:
    """Stateless 64-bit seed for trial ``index``."""
    idx = int(index) & 0xFFFFFFFFFFFFFFFF
    w0, w1, _, _ = philox4x32(
        (idx & 0xFFFFFFFF, idx >> 32, SEED_STREAM, 0), _key(master_seed)
    )
    return int(w0) | (int(w1) << 32)


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    """numpy Generator for auxiliary draws (test vectors, support sampling)."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & 0xFFFFFFFFFFFFFFFF, stream]))
