"""Counter-based random streams for reproducible, random-access simulation.

Every random quantity in this package is a pure function of a 64-bit master
seed and a small integer "address" (purpose tag, position index, user index,
trial index, ...).  This gives three properties the tracing schemes rely on:

* random access: the bit of user j at position i can be generated without
  generating anything else (codewords need not be materialized);
* row stability: adding user n+1 never changes the codewords of users 1..n;
* backend independence: the compiled and the NumPy kernels consume the same
  addressed values, so transcripts are bit-identical across backends.

The generator is SplitMix64: the k-th value of a stream with base ``h`` is
``mix64(h + (k+1) * GOLDEN)`` where ``mix64`` is the Stafford "mix13"
finalizer.  Stream bases are derived by absorbing path components one at a
time (xor, golden increment, mix).  The algorithm is fixed: changing it would
invalidate all golden transcripts.

Scalar helpers here operate on Python ints; the vectorized equivalents live
in the kernel backends (:mod:`tardos.backend`).
"""
from __future__ import annotations

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15  # 2^64 / phi, the SplitMix64 increment
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# Purpose tags.  Each independent use of randomness gets its own tag so that
# streams for different purposes never collide.
TAG_BIAS = 0xB1A5
TAG_BITS = 0xB175
TAG_STRATEGY = 0x57A7
TAG_SCAPEGOAT = 0x5CA9
TAG_TRIAL = 0x7819
TAG_SAMPLE = 0x5A3B


def mix64(z: int) -> int:
    """Stafford mix13 finalizer of SplitMix64 (a 64-bit bijection)."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive_stream(seed: int, *path: int) -> int:
    """Derive the base of a substream addressed by ``path`` under ``seed``."""
    h = mix64((seed + GOLDEN) & MASK64)
    for v in path:
        h = mix64(((h ^ (v & MASK64)) + GOLDEN) & MASK64)
    return h


def value64(base: int, k: int) -> int:
    """The k-th 64-bit value of the stream with the given base (k >= 0)."""
    return mix64((base + ((k + 1) * GOLDEN)) & MASK64)


def uniform64(z: int) -> float:
    """Map a 64-bit value to a double in the open interval (0, 1)."""
    return ((z >> 11) + 0.5) * 2.0 ** -53


def uniform_at(base: int, k: int) -> float:
    """The k-th uniform(0,1) draw of a stream."""
    return uniform64(value64(base, k))
