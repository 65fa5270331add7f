"""Seeded randomness utilities.

Two generators are used deliberately:

* shift bits for dyadic systems come from the stateless splitmix64
  finalizer keyed by ``(seed, stream, index)``. Each Monte Carlo trial
  owns stream = trial index, so trials are reproducible and mergeable in
  any order, and the numba and numpy kernel paths consume identical bits.
* continuous variates (normal coefficients, multipliers) use numpy's
  PCG64 seeded through ``SeedSequence((seed, stream))``.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


def _mix64(z: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, elementwise on uint64 arrays (wraps mod 2^64)."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _MIX1
        z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))


def _stream_base(seed: int, streams: np.ndarray) -> np.ndarray:
    s = np.uint64(seed & _MASK)
    with np.errstate(over="ignore"):
        return _mix64(_mix64(s + _GAMMA) + streams.astype(np.uint64) * _GAMMA)


def shift_bits(seed: int, streams, count: int) -> np.ndarray:
    """Uniform bits, shape ``(len(streams), count)`` uint8.

    ``streams`` may be a scalar or an integer array; stream ``t`` yields the
    splitmix64 sequence seeded at a base derived from ``(seed, t)``.
    """
    streams = np.atleast_1d(np.asarray(streams, dtype=np.uint64))
    base = _stream_base(seed, streams)
    idx = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        words = _mix64(base[:, None] + idx[None, :] * _GAMMA)
    return (words >> np.uint64(63)).astype(np.uint8)


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """PCG64 generator bound to ``(seed, stream)``."""
    return np.random.default_rng(np.random.SeedSequence((seed & _MASK, stream)))
