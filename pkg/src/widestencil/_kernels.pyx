# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled CSR iteration kernels: Jacobi and forward Gauss-Seidel/SOR sweeps.

Contract shared with the pure ``_kernels_py`` backend: sweep in place on x
until ||b - T x||_inf / max(||b||_inf, 1) <= tol, returning
(iterations, relative_residual, status) with status 0 converged,
1 max_iters reached, 2 non-finite values.  The residual is evaluated before
each sweep so the report always describes the returned iterate.
"""

import numpy as np

from libc.math cimport fabs, isfinite


cdef double _denominator(const double[::1] b) noexcept nogil:
    cdef double denom = 1.0
    cdef Py_ssize_t i
    for i in range(b.shape[0]):
        if fabs(b[i]) > denom:
            denom = fabs(b[i])
    return denom


def jacobi_solve(const int[::1] indptr, const int[::1] indices,
                 const double[::1] data, const double[::1] diag,
                 const double[::1] b, double[::1] x,
                 double tol, long max_iters):
    cdef Py_ssize_t n = b.shape[0]
    cdef double[::1] candidate = np.empty(n, dtype=np.float64)
    cdef double denom = _denominator(b)
    cdef long iterations = 0
    cdef Py_ssize_t i, p
    cdef double s, relres
    while True:
        relres = 0.0
        with nogil:
            for i in range(n):
                s = b[i]
                for p in range(indptr[i], indptr[i + 1]):
                    s -= data[p] * x[indices[p]]
                candidate[i] = x[i] + s / diag[i]
                if fabs(s) > relres:
                    relres = fabs(s)
        relres /= denom
        if not isfinite(relres):
            return iterations, relres, 2
        if relres <= tol:
            return iterations, relres, 0
        if iterations >= max_iters:
            return iterations, relres, 1
        x[:] = candidate
        iterations += 1


def sweep_solve(const int[::1] indptr, const int[::1] indices,
                const double[::1] data, const double[::1] diag,
                const int[::1] diag_pos,
                const double[::1] b, double[::1] x,
                double omega, double tol, long max_iters):
    cdef Py_ssize_t n = b.shape[0]
    cdef double denom = _denominator(b)
    cdef long iterations = 0
    cdef Py_ssize_t i, p, dp
    cdef double s, relres
    while True:
        relres = 0.0
        with nogil:
            for i in range(n):
                s = b[i]
                for p in range(indptr[i], indptr[i + 1]):
                    s -= data[p] * x[indices[p]]
                if fabs(s) > relres:
                    relres = fabs(s)
        relres /= denom
        if not isfinite(relres):
            return iterations, relres, 2
        if relres <= tol:
            return iterations, relres, 0
        if iterations >= max_iters:
            return iterations, relres, 1
        with nogil:
            for i in range(n):
                s = b[i]
                dp = diag_pos[i]
                for p in range(indptr[i], dp):
                    s -= data[p] * x[indices[p]]
                for p in range(dp + 1, indptr[i + 1]):
                    s -= data[p] * x[indices[p]]
                x[i] = x[i] + omega * (s / diag[i] - x[i])
        iterations += 1
