# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: Philox4x32-10 counter generator, Thomas solver, pairwise Holder quotient."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, pow, fabs
from libc.stdint cimport uint32_t, uint64_t

cnp.import_array()

cdef uint32_t PHILOX_M0 = 0xD2511F53u
cdef uint32_t PHILOX_M1 = 0xCD9E8D57u
cdef uint32_t PHILOX_W0 = 0x9E3779B9u
cdef uint32_t PHILOX_W1 = 0xBB67AE85u


cdef inline void _philox(uint32_t* ctr, uint32_t k0, uint32_t k1) noexcept nogil:
    cdef uint64_t p0, p1
    cdef uint32_t hi0, lo0, hi1, lo1
    cdef int r
    for r in range(10):
        if r > 0:
            k0 = k0 + PHILOX_W0
            k1 = k1 + PHILOX_W1
        p0 = <uint64_t>PHILOX_M0 * <uint64_t>ctr[0]
        p1 = <uint64_t>PHILOX_M1 * <uint64_t>ctr[2]
        hi0 = <uint32_t>(p0 >> 32)
        lo0 = <uint32_t>p0
        hi1 = <uint32_t>(p1 >> 32)
        lo1 = <uint32_t>p1
        ctr[0] = hi1 ^ ctr[1] ^ k0
        ctr[1] = lo1
        ctr[2] = hi0 ^ ctr[3] ^ k1
        ctr[3] = lo0


def philox4x32(cnp.uint32_t[:, ::1] counters, uint32_t k0, uint32_t k1):
    """Apply Philox4x32-10 to each row of ``counters`` (n, 4); returns a new (n, 4) array."""
    cdef Py_ssize_t n = counters.shape[0], i
    out = np.empty((n, 4), dtype=np.uint32)
    cdef cnp.uint32_t[:, ::1] o = out
    cdef uint32_t c[4]
    with nogil:
        for i in range(n):
            c[0] = counters[i, 0]
            c[1] = counters[i, 1]
            c[2] = counters[i, 2]
            c[3] = counters[i, 3]
            _philox(c, k0, k1)
            o[i, 0] = c[0]
            o[i, 1] = c[1]
            o[i, 2] = c[2]
            o[i, 3] = c[3]
    return out


def uniform_block(uint64_t seed, uint32_t stream, cnp.uint64_t[::1] path_ids,
                  uint32_t step0, Py_ssize_t n_steps, Py_ssize_t n_blocks):
    """Uniforms in (0, 1) keyed by (seed, stream, path, step, block).

    Returns an array of shape (len(path_ids), n_steps, 2 * n_blocks).
    """
    cdef Py_ssize_t n = path_ids.shape[0], i, s, b
    out = np.empty((n, n_steps, 2 * n_blocks), dtype=np.float64)
    cdef double[:, :, ::1] o = out
    cdef uint32_t k0 = <uint32_t>(seed & 0xFFFFFFFFu)
    cdef uint32_t k1 = <uint32_t>(seed >> 32)
    cdef uint32_t c[4]
    cdef uint64_t pid, a, z
    cdef double scale = 1.0 / 4503599627370496.0  # 2**-52
    with nogil:
        for i in range(n):
            pid = path_ids[i]
            for s in range(n_steps):
                for b in range(n_blocks):
                    c[0] = <uint32_t>(step0 + s)
                    c[1] = <uint32_t>(pid & 0xFFFFFFFFu)
                    c[2] = <uint32_t>(pid >> 32)
                    c[3] = <uint32_t>b | (stream << 24)
                    _philox(c, k0, k1)
                    a = ((<uint64_t>(c[0] >> 6)) << 26) | <uint64_t>(c[1] >> 6)
                    z = ((<uint64_t>(c[2] >> 6)) << 26) | <uint64_t>(c[3] >> 6)
                    o[i, s, 2 * b] = (<double>a + 0.5) * scale
                    o[i, s, 2 * b + 1] = (<double>z + 0.5) * scale
    return out


def thomas(double[::1] lower, double[::1] diag, double[::1] upper, double[::1] rhs):
    """Solve a tridiagonal system; ``lower[0]`` and ``upper[-1]`` are ignored."""
    cdef Py_ssize_t n = diag.shape[0], i
    cp_arr = np.empty(n, dtype=np.float64)
    dp_arr = np.empty(n, dtype=np.float64)
    x_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] cp = cp_arr, dp = dp_arr, x = x_arr
    cdef double m
    if diag[0] == 0.0:
        raise ZeroDivisionError("zero pivot at row 0")
    cp[0] = upper[0] / diag[0] if n > 1 else 0.0
    dp[0] = rhs[0] / diag[0]
    for i in range(1, n):
        m = diag[i] - lower[i] * cp[i - 1]
        if m == 0.0:
            raise ZeroDivisionError("zero pivot at row %d" % i)
        cp[i] = upper[i] / m if i < n - 1 else 0.0
        dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / m
    x[n - 1] = dp[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = dp[i] - cp[i] * x[i + 1]
    return x_arr


def holder_max(double[:, ::1] points, double[::1] values, double beta):
    """Exhaustive max of |f(x)-f(y)| / |x-y|**beta over pairs; returns (value, i, j)."""
    cdef Py_ssize_t n = points.shape[0], d = points.shape[1], i, j, k
    cdef double best = 0.0, acc, diff, r
    cdef Py_ssize_t bi = -1, bj = -1
    cdef Py_ssize_t dup_i = -1, dup_j = -1
    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                acc = 0.0
                for k in range(d):
                    diff = points[i, k] - points[j, k]
                    acc = acc + diff * diff
                if acc == 0.0:
                    dup_i = i
                    dup_j = j
                    break
                r = fabs(values[i] - values[j]) / pow(sqrt(acc), beta)
                if r > best or bi < 0:
                    best = r
                    bi = i
                    bj = j
            if dup_i >= 0:
                break
    if dup_i >= 0:
        raise ValueError("duplicate points at indices %d and %d" % (dup_i, dup_j))
    return best, bi, bj
