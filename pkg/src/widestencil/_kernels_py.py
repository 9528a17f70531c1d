"""NumPy/SciPy iteration kernels: fallback backend when the compiled extension is absent.

Both kernels share the compiled backend's contract: given a CSR system they
run sweeps in place on ``x`` until the relative infinity-norm residual

    ||b - T x||_inf / max(||b||_inf, 1)

drops to ``tol``, and return ``(iterations, relative_residual, status)`` with
status 0 = converged, 1 = max_iters reached, 2 = non-finite values appeared.
The residual is always evaluated before a sweep, so a reported convergence
refers to the returned iterate.

Gauss-Seidel/SOR sweeps are realized as one sparse lower-triangular solve
plus one upper matvec per iteration; the triangular factor is prepared once
with SuperLU under natural ordering, which keeps the sweep order ascending
in the flat node index, identical to the compiled row loop.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu


def _csr(indptr, indices, data):
    n = len(indptr) - 1
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def _denominator(b):
    return max(float(np.max(np.abs(b))) if b.size else 0.0, 1.0)


def jacobi_solve(indptr, indices, data, diag, b, x, tol, max_iters):
    A = _csr(indptr, indices, data)
    denom = _denominator(b)
    iterations = 0
    while True:
        r = b - A @ x
        relres = float(np.max(np.abs(r))) / denom if r.size else 0.0
        if not np.isfinite(relres):
            return iterations, relres, 2
        if relres <= tol:
            return iterations, relres, 0
        if iterations >= max_iters:
            return iterations, relres, 1
        x += r / diag
        iterations += 1


def sweep_solve(indptr, indices, data, diag, diag_pos, b, x, omega, tol, max_iters):
    A = _csr(indptr, indices, data)
    upper = sp.triu(A, k=1).tocsr()
    left = sp.tril(A, k=-1) + sp.diags(diag / omega)
    lu = splu(left.tocsc(), permc_spec="NATURAL", diag_pivot_thresh=0.0)
    hold = (1.0 / omega - 1.0) * diag
    denom = _denominator(b)
    iterations = 0
    while True:
        r = b - A @ x
        relres = float(np.max(np.abs(r))) / denom if r.size else 0.0
        if not np.isfinite(relres):
            return iterations, relres, 2
        if relres <= tol:
            return iterations, relres, 0
        if iterations >= max_iters:
            return iterations, relres, 1
        x[:] = lu.solve(b + hold * x - upper @ x)
        iterations += 1
