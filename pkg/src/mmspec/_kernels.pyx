# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for pairwise graph sampling and simplex projection.

Every function here has a numpy twin in ``_fallback`` that consumes the same
uniform draws and returns identical output.
"""
import numpy as np

from libc.stdlib cimport qsort


cdef int _cmp_desc(const void *a, const void *b) noexcept nogil:
    cdef double x = (<const double *> a)[0]
    cdef double y = (<const double *> b)[0]
    if x < y:
        return 1
    if x > y:
        return -1
    return 0


def mmsbm_block(const double[:, ::1] cum, const double[:, ::1] b,
                Py_ssize_t i0, Py_ssize_t i1, const double[:, ::1] u):
    """Edges for rows ``i0 <= i < i1`` (all ``j > i``) of a mixed membership graph.

    ``cum`` holds row-wise cumulative memberships; ``u`` has shape (3, npairs)
    with one column per pair in lexicographic order.
    """
    cdef Py_ssize_t n = cum.shape[0]
    cdef Py_ssize_t k = cum.shape[1]
    cdef Py_ssize_t npairs = u.shape[1]
    out = np.empty((npairs, 2), dtype=np.int32)
    cdef int[:, ::1] o = out
    cdef Py_ssize_t i, j, zi, zj
    cdef Py_ssize_t p = 0, m = 0
    with nogil:
        for i in range(i0, i1):
            for j in range(i + 1, n):
                zi = 0
                while zi < k - 1 and cum[i, zi] <= u[0, p]:
                    zi += 1
                zj = 0
                while zj < k - 1 and cum[j, zj] <= u[1, p]:
                    zj += 1
                if u[2, p] < b[zi, zj]:
                    o[m, 0] = <int> i
                    o[m, 1] = <int> j
                    m += 1
                p += 1
    return out[:m]


def rdpg_block(const double[:, ::1] x, Py_ssize_t i0, Py_ssize_t i1,
               const double[::1] u):
    """Edges for rows ``i0 <= i < i1`` of a random dot product graph."""
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t d = x.shape[1]
    cdef Py_ssize_t npairs = u.shape[0]
    out = np.empty((npairs, 2), dtype=np.int32)
    cdef int[:, ::1] o = out
    cdef Py_ssize_t i, j, c
    cdef Py_ssize_t p = 0, m = 0
    cdef double prob
    with nogil:
        for i in range(i0, i1):
            for j in range(i + 1, n):
                prob = x[i, 0] * x[j, 0]
                for c in range(1, d):
                    prob = prob + x[i, c] * x[j, c]
                if prob > 1.0:
                    prob = 1.0
                elif prob < 0.0:
                    prob = 0.0
                if u[p] < prob:
                    o[m, 0] = <int> i
                    o[m, 1] = <int> j
                    m += 1
                p += 1
    return out[:m]


def project_simplex_rows(const double[:, ::1] v):
    """Euclidean projection of each row onto the probability simplex."""
    cdef Py_ssize_t n = v.shape[0]
    cdef Py_ssize_t k = v.shape[1]
    out = np.empty((n, k), dtype=np.float64)
    buf = np.empty(k, dtype=np.float64)
    cdef double[:, ::1] o = out
    cdef double[::1] s = buf
    cdef Py_ssize_t i, j, rho
    cdef double css, theta, t
    with nogil:
        for i in range(n):
            for j in range(k):
                s[j] = v[i, j]
            qsort(&s[0], k, sizeof(double), _cmp_desc)
            css = 0.0
            rho = 0
            theta = 0.0
            for j in range(k):
                css = css + s[j]
                t = (css - 1.0) / (j + 1)
                if s[j] - t > 0.0:
                    rho = j
                    theta = t
            for j in range(k):
                t = v[i, j] - theta
                o[i, j] = t if t > 0.0 else 0.0
    return out
