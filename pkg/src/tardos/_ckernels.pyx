# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels (Cython twin of ``tardos._kernels_py``).

Bit-identical to the NumPy fallback: same SplitMix64 addressing, same float
operations in the same order (built with -ffp-contract=off so no FMA creeps
in).  See the fallback module for the kernel contracts.
"""
import numpy as np

cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint64_t

cnp.import_array()

BACKEND = "cython"

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15u
cdef uint64_t M1 = 0xBF58476D1CE4E5B9u
cdef uint64_t M2 = 0x94D049BB133111EBu
cdef double TO_UNIT = 2.0 ** -53


cdef inline uint64_t mix(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * M1
    z = (z ^ (z >> 27)) * M2
    return z ^ (z >> 31)


cdef inline double unit(uint64_t z) nogil:
    return (<double> (z >> 11) + 0.5) * TO_UNIT


def values_u64(object base, object start, object count):
    cdef uint64_t b = <uint64_t> (int(base) & 0xFFFFFFFFFFFFFFFF)
    cdef int64_t k0 = int(start)
    cdef int64_t n = int(count)
    out_arr = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] out = out_arr
    cdef int64_t i
    for i in range(n):
        out[i] = mix(b + (<uint64_t> (k0 + i) + 1u) * GOLDEN)
    return out_arr


def uniforms(object base, object start, object count):
    cdef uint64_t b = <uint64_t> (int(base) & 0xFFFFFFFFFFFFFFFF)
    cdef int64_t k0 = int(start)
    cdef int64_t n = int(count)
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef int64_t i
    for i in range(n):
        out[i] = unit(mix(b + (<uint64_t> (k0 + i) + 1u) * GOLDEN))
    return out_arr


def bit_column(object base, cnp.ndarray ids, double p):
    cdef uint64_t b = <uint64_t> (int(base) & 0xFFFFFFFFFFFFFFFF)
    cdef uint64_t[::1] idv = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef int64_t m = idv.shape[0]
    out_arr = np.empty(m, dtype=np.uint8)
    cdef uint8_t[::1] out = out_arr
    cdef int64_t j
    with nogil:
        for j in range(m):
            out[j] = unit(mix(b + (idv[j] + 1u) * GOLDEN)) < p
    return out_arr


def bit_matrix(cnp.ndarray bases, cnp.ndarray ids, cnp.ndarray p):
    cdef uint64_t[::1] bv = np.ascontiguousarray(bases, dtype=np.uint64)
    cdef uint64_t[::1] idv = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef int64_t m = idv.shape[0], ell = bv.shape[0]
    out_arr = np.empty((m, ell), dtype=np.uint8)
    cdef uint8_t[:, ::1] out = out_arr
    cdef int64_t i, j
    cdef uint64_t step
    with nogil:
        for j in range(m):
            step = (idv[j] + 1u) * GOLDEN
            for i in range(ell):
                out[j, i] = unit(mix(bv[i] + step)) < pv[i]
    return out_arr


def step_scores(cnp.ndarray scores, cnp.ndarray active, cnp.ndarray bits,
                double s0, double s1, double z):
    cdef double[::1] sv = scores
    cdef uint8_t[::1] av = active
    cdef uint8_t[::1] bvv = bits
    cdef int64_t m = sv.shape[0]
    cdef list hits = []
    cdef int64_t j
    cdef double s
    for j in range(m):
        if av[j]:
            s = sv[j] + (s1 if bvv[j] else s0)
            sv[j] = s
            if s > z:
                hits.append(j)
    return np.asarray(hits, dtype=np.int64)


def step_universal(cnp.ndarray scores2d, cnp.ndarray active, cnp.ndarray bits,
                   double s0, double s1, cnp.ndarray update,
                   cnp.ndarray consult, cnp.ndarray z):
    cdef double[:, ::1] sv = scores2d
    cdef uint8_t[::1] av = active
    cdef uint8_t[::1] bvv = bits
    cdef uint8_t[::1] up = update
    cdef uint8_t[::1] co = consult
    cdef double[::1] zv = z
    cdef int64_t m = sv.shape[0], ne = sv.shape[1]
    cdef list rows = [], entries = []
    cdef int64_t j, e
    cdef int64_t hit_entry
    cdef double s
    for j in range(m):
        if not av[j]:
            continue
        s = s1 if bvv[j] else s0
        hit_entry = -1
        for e in range(ne):
            if up[e]:
                sv[j, e] = sv[j, e] + s
            if co[e] and sv[j, e] > zv[e] and hit_entry < 0:
                hit_entry = e
        if hit_entry >= 0:
            rows.append(j)
            entries.append(hit_entry)
    return (np.asarray(rows, dtype=np.int64),
            np.asarray(entries, dtype=np.int64))


def static_scores(cnp.ndarray bases, cnp.ndarray ids, cnp.ndarray p,
                  cnp.ndarray s0, cnp.ndarray s1):
    cdef uint64_t[::1] bv = np.ascontiguousarray(bases, dtype=np.uint64)
    cdef uint64_t[::1] idv = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] s0v = np.ascontiguousarray(s0, dtype=np.float64)
    cdef double[::1] s1v = np.ascontiguousarray(s1, dtype=np.float64)
    cdef int64_t m = idv.shape[0], ell = bv.shape[0]
    out_arr = np.zeros(m, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef int64_t i, j
    cdef uint64_t step
    cdef double acc
    with nogil:
        for j in range(m):
            step = (idv[j] + 1u) * GOLDEN
            acc = 0.0
            for i in range(ell):
                if unit(mix(bv[i] + step)) < pv[i]:
                    acc = acc + s1v[i]
                else:
                    acc = acc + s0v[i]
            out[j] = acc
    return out_arr


def crossing_block(cnp.ndarray bases, cnp.ndarray ids, cnp.ndarray p,
                   cnp.ndarray s0, cnp.ndarray s1, cnp.ndarray scored,
                   double z, bint want_envelope):
    cdef uint64_t[::1] bv = np.ascontiguousarray(bases, dtype=np.uint64)
    cdef uint64_t[::1] idv = np.ascontiguousarray(ids, dtype=np.uint64)
    cdef double[::1] pv = np.ascontiguousarray(p, dtype=np.float64)
    cdef double[::1] s0v = np.ascontiguousarray(s0, dtype=np.float64)
    cdef double[::1] s1v = np.ascontiguousarray(s1, dtype=np.float64)
    cdef uint8_t[::1] sc = np.ascontiguousarray(scored, dtype=np.uint8)
    cdef int64_t m = idv.shape[0], ell = bv.shape[0]
    final_arr = np.zeros(m, dtype=np.float64)
    crossed_arr = np.zeros(m, dtype=np.uint8)
    first_arr = np.zeros(m, dtype=np.int64)
    env_min_arr = np.full(ell, np.inf) if want_envelope else np.empty(0)
    env_max_arr = np.full(ell, -np.inf) if want_envelope else np.empty(0)
    cdef double[::1] fin = final_arr
    cdef uint8_t[::1] cr = crossed_arr
    cdef int64_t[::1] fp = first_arr
    cdef double[::1] emin = env_min_arr
    cdef double[::1] emax = env_max_arr
    cdef int64_t i, j
    cdef uint64_t step
    cdef double acc
    with nogil:
        for j in range(m):
            step = (idv[j] + 1u) * GOLDEN
            acc = 0.0
            for i in range(ell):
                if sc[i]:
                    if unit(mix(bv[i] + step)) < pv[i]:
                        acc = acc + s1v[i]
                    else:
                        acc = acc + s0v[i]
                if want_envelope:
                    if acc < emin[i]:
                        emin[i] = acc
                    if acc > emax[i]:
                        emax[i] = acc
                if acc > z and not cr[j]:
                    cr[j] = 1
                    fp[j] = i + 1
            fin[j] = acc
    return final_arr, crossed_arr, first_arr, env_min_arr, env_max_arr
