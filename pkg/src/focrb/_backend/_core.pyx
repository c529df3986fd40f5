# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel backend: zero-state IIR filtering and Gram accumulation.

Plain C loops throughout -- no BLAS, no OpenMP -- so every call is a pure,
thread-count-independent function of its inputs.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


def lfilter_zero_state(num, den, x):
    """Direct form II transposed IIR filter, zero initial state.

    ``den`` must be monic (den[0] == 1); the caller validates.  Output has
    the same length as ``x``.
    """
    cdef double[::1] b = np.ascontiguousarray(num, dtype=np.float64)
    cdef double[::1] a = np.ascontiguousarray(den, dtype=np.float64)
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = max(b.shape[0], a.shape[0])
    cdef Py_ssize_t nx = xv.shape[0]

    out = np.empty(nx, dtype=np.float64)
    cdef double[::1] yv = out
    cdef double[::1] bp = np.zeros(n, dtype=np.float64)
    cdef double[::1] ap = np.zeros(n, dtype=np.float64)
    cdef Py_ssize_t i, k
    for i in range(b.shape[0]):
        bp[i] = b[i]
    for i in range(a.shape[0]):
        ap[i] = a[i]

    cdef double[::1] z = np.zeros(n, dtype=np.float64)  # z[n-1] stays 0
    cdef double xk, yk
    with nogil:
        for k in range(nx):
            xk = xv[k]
            yk = bp[0] * xk + z[0]
            yv[k] = yk
            for i in range(n - 1):
                z[i] = bp[i + 1] * xk + z[i + 1] - ap[i + 1] * yk
    return out


def gram(psi):
    """Symmetric Gram matrix ``psi.T @ psi`` of an (N, d) gradient block."""
    cdef double[:, ::1] p = np.ascontiguousarray(psi, dtype=np.float64)
    cdef Py_ssize_t n = p.shape[0]
    cdef Py_ssize_t d = p.shape[1]
    out = np.zeros((d, d), dtype=np.float64)
    cdef double[:, ::1] g = out
    cdef Py_ssize_t i, j, k
    cdef double pik
    with nogil:
        for k in range(n):
            for i in range(d):
                pik = p[k, i]
                for j in range(i, d):
                    g[i, j] += pik * p[k, j]
        for i in range(d):
            for j in range(i + 1, d):
                g[j, i] = g[i, j]
    return out
