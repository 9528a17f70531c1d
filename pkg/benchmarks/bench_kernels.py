"""Benchmark the compiled iteration kernels against the NumPy/SciPy fallback.

Builds the anisotropic Dirichlet test system and times Jacobi and
Gauss-Seidel solves with both backends:

    python benchmarks/bench_kernels.py --m 160 --tol 1e-10

The fallback realizes a Gauss-Seidel sweep as a SuperLU triangular solve
plus an upper matvec, so the comparison is compiled-row-loop vs
vectorized-library-calls, both mathematically identical sweeps.
"""

import argparse
import time

import numpy as np

from widestencil import _kernels_py, register_builtin_problems
from widestencil.harness import build_system

try:
    from widestencil import _kernels
except ImportError:
    _kernels = None


def run(kernels, S, method, tol, max_iters=200_000):
    x = np.zeros(S.n)
    t0 = time.perf_counter()
    if method == "jacobi":
        iters, res, flag = kernels.jacobi_solve(
            S.indptr, S.indices, S.data, S.diag, S.rhs, x, tol, max_iters
        )
    else:
        iters, res, flag = kernels.sweep_solve(
            S.indptr, S.indices, S.data, S.diag, S.diag_pos, S.rhs, x, 1.0, tol, max_iters
        )
    elapsed = time.perf_counter() - t0
    assert flag == 0, f"{method} did not converge ({iters} iters, relres {res:.2e})"
    return x, iters, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--m", type=int, default=160, help="cells per axis")
    parser.add_argument("--tol", type=float, default=1e-10)
    args = parser.parse_args()

    case = register_builtin_problems()["dirichlet-exp"]
    g = case.make_grid(args.m, args.m)
    t0 = time.perf_counter()
    S = build_system(case, g)
    print(f"system: n={S.n}, nnz={len(S.data)} (assembled in {time.perf_counter()-t0:.2f}s)")

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.insert(0, ("cython", _kernels))
    else:
        print("compiled extension not built; benchmarking the fallback only")

    print(f"{'backend':>8} {'method':>13} {'iters':>7} {'total [s]':>10} {'per sweep [ms]':>15}")
    results = {}
    for method in ("gauss-seidel", "jacobi"):
        for name, kernels in backends:
            x, iters, elapsed = run(kernels, S, method, args.tol)
            results[(name, method)] = (x, elapsed)
            print(f"{name:>8} {method:>13} {iters:>7} {elapsed:>10.3f} {1000*elapsed/max(iters,1):>15.3f}")
        if len(backends) == 2:
            xc, tc = results[("cython", method)]
            xp, tp = results[("python", method)]
            gap = np.max(np.abs(xc - xp))
            print(f"         {method}: python/cython time ratio {tp/tc:.2f}x, |x_c - x_p|_inf = {gap:.2e}")


if __name__ == "__main__":
    main()
