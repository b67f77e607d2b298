"""NumPy fallback for the hot kernels.

Same contracts as the compiled extension ``tardos._ckernels``; results are
bit-identical (every float is produced by the same operations in the same
order — running sums use cumulative accumulation, never pairwise reduction).
"""
from __future__ import annotations

import numpy as np

from .rng import GOLDEN, MASK64

BACKEND = "numpy"

_U64 = np.uint64
_G = _U64(GOLDEN)
_M1 = _U64(0xBF58476D1CE4E5B9)
_M2 = _U64(0x94D049BB133111EB)
_TO_UNIT = 2.0 ** -53

# Position block size for the blocked scoring kernels: large enough to
# amortize NumPy call overhead, small enough to keep temporaries in cache.
_BLOCK = 1024


def _mix(z):
    z = (z ^ (z >> _U64(30))) * _M1
    z = (z ^ (z >> _U64(27))) * _M2
    return z ^ (z >> _U64(31))


def _step(base, k):
    # k-th stream value(s): mix64(base + (k+1)*GOLDEN), everything wraps mod 2^64
    return _mix(base + (k + _U64(1)) * _G)


def values_u64(base: int, start: int, count: int) -> np.ndarray:
    """Values start .. start+count-1 of the stream with the given base."""
    ks = np.arange(start, start + count, dtype=np.uint64)
    return _step(_U64(base & MASK64), ks)


def uniforms(base: int, start: int, count: int) -> np.ndarray:
    """Uniform(0,1) draws start .. start+count-1 of a stream."""
    v = values_u64(base, start, count)
    return ((v >> _U64(11)).astype(np.float64) + 0.5) * _TO_UNIT


def bit_column(base: int, ids: np.ndarray, p: float) -> np.ndarray:
    """Bernoulli(p) bits for the given user ids at one position.

    ``base`` is the per-position stream base; the bit of user ``id`` is
    drawn from stream value ``id``.
    """
    v = _step(_U64(base & MASK64), ids.astype(np.uint64, copy=False))
    u = ((v >> _U64(11)).astype(np.float64) + 0.5) * _TO_UNIT
    return (u < p).astype(np.uint8)


def bit_matrix(bases: np.ndarray, ids: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Bit matrix (len(ids) x len(bases)) for per-position bases and biases."""
    step = (ids.astype(np.uint64, copy=False) + _U64(1)) * _G
    v = _mix(bases[np.newaxis, :] + step[:, np.newaxis])
    u = ((v >> _U64(11)).astype(np.float64) + 0.5) * _TO_UNIT
    return (u < p[np.newaxis, :]).astype(np.uint8)


def step_scores(scores, active, bits, s0: float, s1: float, z: float):
    """One accusation step: add per-position scores, return newly crossed rows.

    Frozen (inactive) rows are left untouched; a row crosses when its updated
    score strictly exceeds ``z``.  Returns ascending row indices.
    """
    sel = np.where(bits.astype(bool), s1, s0)
    act = active.astype(bool)
    scores += np.where(act, sel, 0.0)
    return np.flatnonzero(act & (scores > z)).astype(np.int64)


def step_universal(scores2d, active, bits, s0: float, s1: float,
                   update, consult, z):
    """Universal accusation step over ladder entries.

    ``scores2d`` is (users x entries); entries with ``update`` set receive the
    per-position score of each active user; a user crosses when some entry
    with ``consult`` set exceeds its threshold ``z[entry]``.  Returns
    (rows, entries): ascending user rows and the lowest crossing entry index
    for each.
    """
    sel = np.where(bits.astype(bool), s1, s0)
    act = active.astype(bool)
    mask = act[:, np.newaxis] & update.astype(bool)[np.newaxis, :]
    scores2d += np.where(mask, sel[:, np.newaxis], 0.0)
    over = (scores2d > z[np.newaxis, :]) & consult.astype(bool)[np.newaxis, :]
    over &= act[:, np.newaxis]
    rows = np.flatnonzero(over.any(axis=1)).astype(np.int64)
    entries = over[rows].argmax(axis=1).astype(np.int64)
    return rows, entries


def static_scores(bases, ids, p, s0, s1):
    """Total accusation scores of each user over all positions.

    Accumulation is sequential in position (cumulative, not pairwise), so the
    totals equal those of a position-at-a-time engine bit for bit.
    """
    m = ids.shape[0]
    ell = bases.shape[0]
    out = np.zeros(m, dtype=np.float64)
    step = (ids.astype(np.uint64, copy=False) + _U64(1)) * _G
    for lo in range(0, ell, _BLOCK):
        hi = min(lo + _BLOCK, ell)
        v = _mix(bases[np.newaxis, lo:hi] + step[:, np.newaxis])
        u = ((v >> _U64(11)).astype(np.float64) + 0.5) * _TO_UNIT
        bits = u < p[np.newaxis, lo:hi]
        sel = np.where(bits, s1[np.newaxis, lo:hi], s0[np.newaxis, lo:hi])
        cum = np.cumsum(sel, axis=1)
        cum += out[:, np.newaxis]
        out = cum[:, -1].copy()
    return out


def crossing_block(bases, ids, p, s0, s1, scored, z: float,
                   want_envelope: bool):
    """Score users over a recorded trace and detect threshold crossings.

    For each user: final (extended) score, whether the running score ever
    strictly exceeded ``z`` on the scored prefix, and the 1-based position of
    the first crossing (0 if none).  Optionally the per-position min/max score
    envelope over all users.  Positions with ``scored == 0`` contribute 0.
    """
    m = ids.shape[0]
    ell = bases.shape[0]
    final = np.zeros(m, dtype=np.float64)
    crossed = np.zeros(m, dtype=np.uint8)
    first_pos = np.zeros(m, dtype=np.int64)
    env_min = np.full(ell, np.inf) if want_envelope else np.empty(0)
    env_max = np.full(ell, -np.inf) if want_envelope else np.empty(0)
    step = (ids.astype(np.uint64, copy=False) + _U64(1)) * _G
    for lo in range(0, ell, _BLOCK):
        hi = min(lo + _BLOCK, ell)
        v = _mix(bases[np.newaxis, lo:hi] + step[:, np.newaxis])
        u = ((v >> _U64(11)).astype(np.float64) + 0.5) * _TO_UNIT
        bits = u < p[np.newaxis, lo:hi]
        sel = np.where(bits, s1[np.newaxis, lo:hi], s0[np.newaxis, lo:hi])
        sel = np.where(scored[np.newaxis, lo:hi].astype(bool), sel, 0.0)
        cum = np.cumsum(sel, axis=1)
        cum += final[:, np.newaxis]
        final = cum[:, -1].copy()
        if want_envelope and m:
            np.minimum(env_min[lo:hi], cum.min(axis=0), out=env_min[lo:hi])
            np.maximum(env_max[lo:hi], cum.max(axis=0), out=env_max[lo:hi])
        hit = cum > z
        newly = np.flatnonzero((crossed == 0) & hit.any(axis=1))
        if newly.size:
            first_pos[newly] = lo + 1 + hit[newly].argmax(axis=1)
            crossed[newly] = 1
    return final, crossed, first_pos, env_min, env_max
