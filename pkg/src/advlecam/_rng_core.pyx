# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled xorshift64* kernels.

Must stay bit-for-bit identical to ``_rng_py``; the parity tests enforce it.
Built with ``-ffp-contract=off`` so the polar transform is never fused.
"""
from libc.math cimport log, sqrt
from libc.stdint cimport uint64_t

cdef uint64_t _MULT = 0x2545F4914F6CDD1DULL
cdef double _TO_UNIT = 1.0 / 9007199254740992.0


cdef inline uint64_t _step(uint64_t* s) noexcept nogil:
    cdef uint64_t x = s[0]
    x ^= x >> 12
    x ^= x << 25
    x ^= x >> 27
    s[0] = x
    return x * _MULT


def fill_uniform(uint64_t state, double[::1] out):
    cdef Py_ssize_t i, n = out.shape[0]
    cdef uint64_t s = state
    with nogil:
        for i in range(n):
            out[i] = <double>(_step(&s) >> 11) * _TO_UNIT
    return s


def fill_normal(uint64_t state, double[::1] out):
    cdef Py_ssize_t i = 0, n = out.shape[0]
    cdef uint64_t s = state
    cdef double u1, u2, r2, f
    with nogil:
        while i < n:
            u1 = 2.0 * (<double>(_step(&s) >> 11) * _TO_UNIT) - 1.0
            u2 = 2.0 * (<double>(_step(&s) >> 11) * _TO_UNIT) - 1.0
            r2 = u1 * u1 + u2 * u2
            if r2 >= 1.0 or r2 == 0.0:
                continue
            f = sqrt(-2.0 * log(r2) / r2)
            out[i] = u1 * f
            i += 1
            if i < n:
                out[i] = u2 * f
                i += 1
    return s
