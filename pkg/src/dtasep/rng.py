"""Counter-based random number generation.

Every random quantity in the package is a pure function of a 64-bit key and a
64-bit counter, built from splitmix64. This gives draws that are addressable
by index (a disorder field over any label window regenerates without
generating predecessors, including negative labels), identical across runs
and platforms, and shareable between coupled processes without hidden state.

Keys are derived from a user seed and a stream tag with `derive`; the draw at
counter ``n`` under key ``k`` is splitmix64 output ``n`` of the sequence
seeded at ``k``.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

# Stream tags. Distinct tags give unrelated substreams of one user seed.
STREAM_RATES = 0x52415445
STREAM_GAPS = 0x47415053
STREAM_CLOCK = 0x434C4F43
STREAM_THIN = 0x5448494E
STREAM_SERVICE = 0x53455256
STREAM_REPLICA = 0x5245504C


def splitmix64(x: int) -> int:
    """One splitmix64 finalization of a 64-bit integer."""
    x = (x + GOLDEN) & MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & MASK64
    return x ^ (x >> 31)


def derive(key: int, *tokens: int) -> int:
    """Derive a subkey by folding integer tokens into `key`.

    Tokens may be negative (labels); they enter via their 64-bit two's
    complement image, so distinct labels give distinct tokens.
    """
    h = key & MASK64
    for t in tokens:
        h = splitmix64((h ^ (t & MASK64)) & MASK64)
    return h


def uniform(key: int, counter: int) -> float:
    """Draw number `counter` of stream `key`, uniform on (0, 1]."""
    z = splitmix64((key + (counter & MASK64) * GOLDEN) & MASK64)
    return ((z >> 11) + 1) * 2.0**-53


def uniform_array(key: int, counters: np.ndarray) -> np.ndarray:
    """Vectorized `uniform` over an int64/uint64 counter array."""
    c = np.asarray(counters).astype(np.uint64)
    with np.errstate(over="ignore"):
        x = np.uint64(key) + c * np.uint64(GOLDEN)
        x = (x + np.uint64(GOLDEN)) & np.uint64(MASK64)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
        x = x ^ (x >> np.uint64(31))
    return ((x >> np.uint64(11)).astype(np.float64) + 1.0) * 2.0**-53


def derive_array(key: int, tokens: np.ndarray) -> np.ndarray:
    """Vectorized `derive(key, token)` for an integer token array (uint64)."""
    tok = np.asarray(tokens).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = (np.uint64(key) ^ tok) & np.uint64(MASK64)
        h = (h + np.uint64(GOLDEN)) & np.uint64(MASK64)
        h = (h ^ (h >> np.uint64(30))) * np.uint64(_MIX1)
        h = (h ^ (h >> np.uint64(27))) * np.uint64(_MIX2)
        h = h ^ (h >> np.uint64(31))
    return h
