"""Seeded, reproducible generation of bias vectors and binary code matrices.

Two interchangeable sources feed the tracers:

* :class:`StreamingCode` — nothing materialized; the bias of position i and
  the bit of user j at position i are pure functions of (seed, i, j), so any
  column can be generated in O(users) without touching other positions.
* :class:`CodeBook` — a materialized n x ell matrix for desk-scale work,
  generated from the same streams (batch and streaming output are
  bit-identical) and persistable to a compact binary file.

Both expose: ``n``, ``user_ids``, ``seed``, ``delta_used``, ``bias_at(i)``,
``biases(lo, hi)``, ``column(i, p=None)`` and ``subset(...)`` (positions are
1-based throughout).

File format (little endian): magic ``TTCB``, u32 version, u64 n, u64 ell,
u64 seed, f64 delta; then ell f64 biases; then the matrix row-major with each
row bit-packed to ceil(ell/8) bytes; then an 8-byte BLAKE2b checksum of
everything before it.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .backend import K
from .distributions import BiasDistribution
from .rng import GOLDEN, MASK64, TAG_BIAS, TAG_BITS, derive_stream, mix64

_MAGIC = b"TTCB"
_VERSION = 1
_HEADER = struct.Struct("<4sIQQQd")

# refuse to materialize matrices beyond ~200M entries; streaming exists for a
# reason (paper scale is ~10^6 x 10^5 bits = 12.5 GB packed)
_MATERIALIZE_LIMIT = 200_000_000


class CodebookError(ValueError):
    """Base class for codebook persistence failures."""


class CorruptHeaderError(CodebookError):
    pass


class DimensionError(CodebookError):
    pass


class ChecksumError(CodebookError):
    pass


def position_base(seed: int, i: int) -> int:
    """Stream base for the user bits of position i (1-based)."""
    return derive_stream(seed, TAG_BITS, i)


def position_bases(seed: int, lo: int, hi: int) -> np.ndarray:
    """Per-position stream bases for positions lo..hi-1, as one uint64 array.

    Same values as :func:`position_base`, with the final absorption step
    vectorized over the position index.
    """
    h = mix64(((mix64((seed + GOLDEN) & MASK64) ^ TAG_BITS) + GOLDEN) & MASK64)
    z = np.uint64(h) ^ np.arange(lo, hi, dtype=np.uint64)
    z = z + np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


def biases_for(seed: int, delta: float, lo: int, hi: int) -> np.ndarray:
    """Biases of positions lo..hi-1 (1-based), drawn from F_delta."""
    u = K.uniforms(derive_stream(seed, TAG_BIAS), lo - 1, hi - lo)
    return BiasDistribution(delta).sample(u)


def generate_position(seed: int, i: int, delta: float, n: int):
    """(p_i, column of n bits) for position i; pure random access."""
    if i < 1:
        raise ValueError("positions are 1-based")
    p = float(biases_for(seed, delta, i, i + 1)[0])
    ids = np.arange(n, dtype=np.uint64)
    return p, K.bit_column(position_base(seed, i), ids, p)


@dataclass
class StreamingCode:
    """Code source generating biases and columns on demand from the seed."""

    seed: int
    n: int
    delta_used: float
    user_ids: Optional[np.ndarray] = None  # global ids; default 0..n-1

    def __post_init__(self):
        if self.user_ids is None:
            self.user_ids = np.arange(self.n, dtype=np.uint64)
        else:
            self.user_ids = np.asarray(self.user_ids, dtype=np.uint64)
            self.n = len(self.user_ids)

    def bias_at(self, i: int) -> float:
        return float(self.biases(i, i + 1)[0])

    def biases(self, lo: int, hi: int) -> np.ndarray:
        return biases_for(self.seed, self.delta_used, lo, hi)

    def column(self, i: int, p: Optional[float] = None) -> np.ndarray:
        if p is None:
            p = self.bias_at(i)
        return K.bit_column(position_base(self.seed, i), self.user_ids, p)

    def subset(self, user_ids) -> "StreamingCode":
        """A view over a subset of users (same seed, same streams)."""
        return StreamingCode(seed=self.seed, n=len(user_ids),
                             delta_used=self.delta_used,
                             user_ids=np.asarray(user_ids, dtype=np.uint64))


@dataclass
class CodeBook:
    """Materialized code: bias vector and n x ell bit matrix."""

    bias: np.ndarray
    matrix: np.ndarray
    seed: int
    delta_used: float
    user_ids: Optional[np.ndarray] = None

    def __post_init__(self):
        self.bias = np.asarray(self.bias, dtype=np.float64)
        self.matrix = np.asarray(self.matrix, dtype=np.uint8)
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(self.bias):
            raise DimensionError("matrix must be n x len(bias)")
        if self.user_ids is None:
            self.user_ids = np.arange(self.n, dtype=np.uint64)
        else:
            self.user_ids = np.asarray(self.user_ids, dtype=np.uint64)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def ell(self) -> int:
        return self.matrix.shape[1]

    @classmethod
    def generate(cls, seed: int, n: int, ell: int, delta: float) -> "CodeBook":
        """Batch generation; identical bits to the streaming source."""
        if n < 1 or ell < 1:
            raise DimensionError(f"need n, ell >= 1, got n={n}, ell={ell}")
        if n * ell > _MATERIALIZE_LIMIT:
            raise DimensionError(
                f"{n} x {ell} matrix is too large to materialize; "
                "use StreamingCode")
        bias = biases_for(seed, delta, 1, ell + 1)
        bases = position_bases(seed, 1, ell + 1)
        ids = np.arange(n, dtype=np.uint64)
        matrix = K.bit_matrix(bases, ids, bias)
        return cls(bias=bias, matrix=matrix, seed=seed, delta_used=delta)

    def bias_at(self, i: int) -> float:
        return float(self.bias[i - 1])

    def biases(self, lo: int, hi: int) -> np.ndarray:
        return self.bias[lo - 1:hi - 1]

    def column(self, i: int, p: Optional[float] = None) -> np.ndarray:
        return self.matrix[:, i - 1]

    def subset(self, rows) -> "CodeBook":
        rows = np.asarray(rows, dtype=np.int64)
        return CodeBook(bias=self.bias, matrix=self.matrix[rows],
                        seed=self.seed, delta_used=self.delta_used,
                        user_ids=self.user_ids[rows])


def write_codebook(cb: CodeBook, path) -> None:
    """Persist a materialized codebook (see module docstring for the format)."""
    header = _HEADER.pack(_MAGIC, _VERSION, cb.n, cb.ell,
                          cb.seed & (2 ** 64 - 1), cb.delta_used)
    packed = np.packbits(cb.matrix, axis=1).tobytes()
    payload = header + cb.bias.astype("<f8").tobytes() + packed
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    with open(path, "wb") as f:
        f.write(payload)
        f.write(digest)


def read_codebook(path) -> CodeBook:
    """Read a codebook file, verifying structure and checksum."""
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < _HEADER.size + 8:
        raise CorruptHeaderError("file too short for a codebook header")
    magic, version, n, ell, seed, delta = _HEADER.unpack_from(blob, 0)
    if magic != _MAGIC:
        raise CorruptHeaderError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise CorruptHeaderError(f"unsupported version {version}")
    if n < 1 or ell < 1:
        raise DimensionError(f"header claims n={n}, ell={ell}")
    row_bytes = (ell + 7) // 8
    expected = _HEADER.size + 8 * ell + n * row_bytes
    if len(blob) != expected + 8:
        raise ChecksumError(
            f"file length {len(blob)} != expected {expected + 8} "
            "(truncated or padded)")
    digest = hashlib.blake2b(blob[:expected], digest_size=8).digest()
    if digest != blob[expected:]:
        raise ChecksumError("checksum mismatch")
    off = _HEADER.size
    bias = np.frombuffer(blob, dtype="<f8", count=ell, offset=off).copy()
    off += 8 * ell
    packed = np.frombuffer(blob, dtype=np.uint8, count=n * row_bytes,
                           offset=off).reshape(n, row_bytes)
    matrix = np.unpackbits(packed, axis=1)[:, :ell]
    return CodeBook(bias=bias, matrix=matrix, seed=seed, delta_used=delta)
