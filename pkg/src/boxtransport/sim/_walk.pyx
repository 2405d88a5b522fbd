# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled lattice-walk kernels.

Bit-for-bit twin of ``_walk_py``: same RNG stream layout, same floating
point operation order. The loops live in ``_walk_core.h``; this module only
marshals arguments and splits work across threads.
"""

from libc.stdint cimport uint64_t
from cython.parallel cimport prange

import numpy as np


cdef extern from "_walk_core.h" nogil:
    enum:
        BT_LANES
    ctypedef struct bt_walk:
        double sx[6]
        double sy[6]
        uint64_t cut[5]
        int bits
        double a, two_a, b, half_b, tau
    int bt_simd_ok()
    void bt_absorb_chunk(const bt_walk* W, double x0, uint64_t base,
                         long long first, long long count,
                         long long max_steps, double* out, int simd)
    void bt_reflect_block(const bt_walk* W, double x0, double y0, uint64_t base,
                          long long first, int lanes, long long n_steps,
                          double* X, double* Y, int simd)


DEF CHUNK = 256


def simd_available():
    """True when the AVX-512 kernels will be used."""
    return bool(bt_simd_ok())


cdef bt_walk make_walk(dict spec) except *:
    cdef bt_walk W
    cdef int i
    for i in range(6):
        W.sx[i] = spec["sx"][i]
        W.sy[i] = spec["sy"][i]
    for i in range(5):
        W.cut[i] = spec["cut"][i]
    W.bits = spec["bits"]
    W.a = spec["a"]
    W.two_a = spec["two_a"]
    W.b = spec["b"]
    W.half_b = spec["half_b"]
    W.tau = spec["tau"]
    return W


def absorb(dict spec, double x0, uint64_t base, long long first,
           long long count, long long max_steps, int threads=1, bint simd=True):
    """Goal-wall arrival times for walkers ``first .. first+count-1``.

    Censored walkers (no arrival within ``max_steps``) get ``inf``.
    """
    cdef bt_walk W = make_walk(spec)
    out = np.empty(count, dtype=np.float64)
    if count == 0:
        return out
    cdef double[::1] t = out
    cdef long long n_chunks = (count + CHUNK - 1) // CHUNK
    cdef long long ci, lo, n
    cdef int use_simd = simd
    for ci in prange(n_chunks, nogil=True, schedule="dynamic", num_threads=threads):
        lo = ci * CHUNK
        n = count - lo
        if n > CHUNK:
            n = CHUNK
        bt_absorb_chunk(&W, x0, base, first + lo, n, max_steps, &t[lo], use_simd)
    return out


def reflect(dict spec, double x0, double y0, uint64_t base, long long first,
            long long count, long long n_steps, int threads=1, bint simd=True):
    """Positions after ``n_steps`` steps in the closed box."""
    cdef bt_walk W = make_walk(spec)
    xs = np.empty(count, dtype=np.float64)
    ys = np.empty(count, dtype=np.float64)
    if count == 0:
        return xs, ys
    cdef double[::1] X = xs
    cdef double[::1] Y = ys
    cdef long long n_blocks = (count + BT_LANES - 1) // BT_LANES
    cdef long long bi, lo
    cdef int lanes
    cdef int use_simd = simd
    for bi in prange(n_blocks, nogil=True, schedule="dynamic", num_threads=threads):
        lo = bi * BT_LANES
        lanes = <int>(count - lo)
        if lanes > BT_LANES:
            lanes = BT_LANES
        bt_reflect_block(&W, x0, y0, base, first + lo, lanes, n_steps,
                         &X[lo], &Y[lo], use_simd)
    return xs, ys
