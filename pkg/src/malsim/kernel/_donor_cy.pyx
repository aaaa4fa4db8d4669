# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled donor-cell update; see ``_donor_py`` for the reference semantics."""

import numpy as np


cdef inline double _pos(double c) noexcept nogil:
    return c if c > 0.0 else 0.0


cdef inline double _neg(double c) noexcept nogil:
    return c if c < 0.0 else 0.0


cdef inline double _flux(double c, double left, double right) noexcept nogil:
    return _pos(c) * left + _neg(c) * right


def donor_cell_interior(x, u1, u2, u3, double c1, double c2, double c3, Py_ssize_t halo):
    cdef const double[:, :, ::1] X = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, :, ::1] U1 = np.ascontiguousarray(u1, dtype=np.float64)
    cdef const double[:, :, ::1] U2 = np.ascontiguousarray(u2, dtype=np.float64)
    cdef const double[:, :, ::1] U3 = np.ascontiguousarray(u3, dtype=np.float64)
    cdef Py_ssize_t n = X.shape[0] - 2 * halo
    cdef Py_ssize_t M = X.shape[1]
    cdef Py_ssize_t K = X.shape[2]
    out = np.empty((n, M, K), dtype=np.float64)
    cdef double[:, :, ::1] O = out
    cdef Py_ssize_t i, ii, j, jp, jm, k, kp, km
    cdef double xc, cp, cm, d1, d2, d3

    with nogil:
        for i in range(n):
            ii = i + halo
            for j in range(M):
                jp = j + 1 if j + 1 < M else 0
                jm = j - 1 if j > 0 else M - 1
                for k in range(K):
                    kp = k + 1 if k + 1 < K else 0
                    km = k - 1 if k > 0 else K - 1
                    xc = X[ii, j, k]

                    cp = ((U1[ii, j, k] + U1[ii + 1, j, k]) * 0.5) * c1
                    cm = ((U1[ii - 1, j, k] + U1[ii, j, k]) * 0.5) * c1
                    d1 = _flux(cp, xc, X[ii + 1, j, k]) - _flux(cm, X[ii - 1, j, k], xc)

                    cp = ((U2[ii, j, k] + U2[ii, jp, k]) * 0.5) * c2
                    cm = ((U2[ii, jm, k] + U2[ii, j, k]) * 0.5) * c2
                    d2 = _flux(cp, xc, X[ii, jp, k]) - _flux(cm, X[ii, jm, k], xc)

                    cp = ((U3[ii, j, k] + U3[ii, j, kp]) * 0.5) * c3
                    cm = ((U3[ii, j, km] + U3[ii, j, k]) * 0.5) * c3
                    d3 = _flux(cp, xc, X[ii, j, kp]) - _flux(cm, X[ii, j, km], xc)

                    O[i, j, k] = xc - ((d1 + d2) + d3)
    return out
