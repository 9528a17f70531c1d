"""Problem registry, convergence-study runner, CSV reporting, MC oracle, and CLI."""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .assembly import (
    BoundarySpec,
    SparseSystem,
    assemble_dirichlet,
    assemble_neumann,
    assemble_periodic,
)
from .coefficients import CoefficientSet, _eval_field, evaluate_on_grid
from .branches import (
    BranchKind,
    build_branchset_dirichlet,
    build_branchset_neumann,
    build_branchset_periodic,
)
from .errors import RegistrationError
from .grid import Grid2D, make_grid
from .interpolation import interpolation_stencil
from .solver import SolveConfig, SolveResult, solve

DEFAULT_GRIDS = ((20, 20), (40, 40), (80, 80), (160, 160), (320, 320))

_SELF_CHECK_TOL = 1e-8
_SELF_CHECK_POINTS = 100
_FD_STEP = 2e-3  # balances fourth-order truncation against roundoff in d^2 divisions
_MC_MAX_STEPS = 10 ** 6
_MC_WEIGHT_CUTOFF = 1e-16


@dataclass
class ProblemCase:
    """A named experiment: boundary treatment, coefficients, optional exact solution."""

    name: str
    boundary: BoundarySpec
    coefficients: CoefficientSet
    exact_solution: Optional[Callable[[float, float], float]]
    grids: tuple[tuple[int, int], ...] = DEFAULT_GRIDS
    domain: tuple[float, float, float, float] = (0.0, 1.0, 0.0, 1.0)

    def make_grid(self, M1: int, M2: int) -> Grid2D:
        x0, x1, y0, y1 = self.domain
        return make_grid(x0, x1, y0, y1, M1, M2)


@dataclass
class ErrorRow:
    """One line of a refinement table; rates are absent on the first row."""

    M1: int
    M2: int
    err_inf: float
    err_l2: float
    rate_inf: Optional[float] = None
    rate_l2: Optional[float] = None
    converged: bool = True


@dataclass
class RunArtifact:
    """Per-grid byproducts of run_case, for reuse by checks and the MC oracle."""

    grid: Grid2D
    system: SparseSystem
    result: SolveResult
    solution: np.ndarray  # nodal values on the full grid, shape (M1+1, M2+1)


# ---------------------------------------------------------------------------
# PDE-residual self-check (fourth-order finite differences of the exact solution)

_D1_OFFSETS = (2.0, 1.0, -1.0, -2.0)
_D1_COEFFS = (-1.0, 8.0, -8.0, 1.0)


def _d1(f: Callable[[float], float], t: float, d: float) -> float:
    return sum(c * f(t + o * d) for c, o in zip(_D1_COEFFS, _D1_OFFSETS)) / (12.0 * d)


def _d2(f: Callable[[float], float], t: float, d: float) -> float:
    return (
        -f(t + 2 * d) + 16.0 * f(t + d) - 30.0 * f(t) + 16.0 * f(t - d) - f(t - 2 * d)
    ) / (12.0 * d * d)


def pde_residual(c: CoefficientSet, f: Callable, x: float, y: float, step: float = _FD_STEP) -> float:
    """Residual of the operator at (x, y) for a candidate solution f."""
    fx = _d1(lambda t: f(t, y), x, step)
    fy = _d1(lambda t: f(x, t), y, step)
    fxx = _d2(lambda t: f(t, y), x, step)
    fyy = _d2(lambda t: f(x, t), y, step)
    fxy = _d1(lambda t: _d1(lambda u: f(t, u), y, step), x, step)
    s1 = float(c.sigma1(x, y))
    s2 = float(c.sigma2(x, y))
    rho = float(c.rho(x, y))
    return (
        0.5 * s1 * s1 * fxx
        + rho * s1 * s2 * fxy
        + 0.5 * s2 * s2 * fyy
        + float(c.b1(x, y)) * fx
        + float(c.b2(x, y)) * fy
        - float(c.r(x, y)) * f(x, y)
        + float(c.q(x, y))
    )


def _self_check(case: ProblemCase) -> None:
    if case.exact_solution is None:
        return
    x0, x1, y0, y1 = case.domain
    pad = 3.0 * _FD_STEP
    rng = np.random.default_rng(0)
    xs = x0 + pad + (x1 - x0 - 2 * pad) * rng.random(_SELF_CHECK_POINTS)
    ys = y0 + pad + (y1 - y0 - 2 * pad) * rng.random(_SELF_CHECK_POINTS)
    worst = max(
        abs(pde_residual(case.coefficients, case.exact_solution, float(x), float(y)))
        for x, y in zip(xs, ys)
    )
    if worst > _SELF_CHECK_TOL:
        raise RegistrationError(
            f"case {case.name!r}: exact solution leaves PDE residual {worst:.3e} "
            f"(> {_SELF_CHECK_TOL}); check the source term transcription"
        )


# ---------------------------------------------------------------------------
# Built-in problems

def register_builtin_problems() -> dict[str, ProblemCase]:
    """The three bundled experiments, each self-checked at registration."""
    pi = math.pi

    exp_exact = lambda x, y: np.exp(x + y)
    dirichlet_exp = ProblemCase(
        name="dirichlet-exp",
        boundary=BoundarySpec("dirichlet", boundary_values=exp_exact),
        coefficients=CoefficientSet(
            sigma1=lambda x, y: 0.5 * (x + 1.0),
            sigma2=lambda x, y: x + 1.0,
            rho=0.9,
            b1=0.0,
            b2=0.0,
            r=lambda x, y: 1.075 * (x + 1.0) ** 2,
            q=0.0,
        ),
        exact_solution=exp_exact,
    )

    sin_exact = lambda x, y: np.sin(pi * x - pi / 2) * np.sin(pi * y - pi / 2)

    def neumann_q(x, y):
        s = np.sin(pi * x - pi / 2) * np.sin(pi * y - pi / 2)
        cc = np.cos(pi * x - pi / 2) * np.cos(pi * y - pi / 2)
        return -0.45 * (x + 1.0) ** 2 * cc + 0.625 * (x + 1.0) ** 2 * s + 4.0 * s

    neumann_sine = ProblemCase(
        name="neumann-sine",
        boundary=BoundarySpec("neumann"),
        coefficients=CoefficientSet(
            sigma1=lambda x, y: (x + 1.0) / (2.0 * pi),
            sigma2=lambda x, y: (x + 1.0) / pi,
            rho=0.9,
            b1=0.0,
            b2=0.0,
            r=4.0,
            q=neumann_q,
        ),
        exact_solution=sin_exact,
    )

    per_exact = lambda x, y: np.sin(2 * pi * x) * np.sin(2 * pi * y)

    def periodic_q(x, y):
        s = np.sin(2 * pi * x) * np.sin(2 * pi * y)
        cc = np.cos(2 * pi * x) * np.cos(2 * pi * y)
        return 0.625 * (s + 2.0) ** 2 * s - 0.45 * (s + 2.0) ** 2 * cc + 4.0 * s

    periodic_sine = ProblemCase(
        name="periodic-sine",
        boundary=BoundarySpec("periodic"),
        coefficients=CoefficientSet(
            sigma1=lambda x, y: (np.sin(2 * pi * x) * np.sin(2 * pi * y) + 2.0) / (2.0 * pi),
            sigma2=lambda x, y: (np.sin(2 * pi * x) * np.sin(2 * pi * y) + 2.0) / (4.0 * pi),
            rho=0.9,
            b1=lambda x, y: np.sin(2 * pi * x) * np.cos(2 * pi * y),
            b2=lambda x, y: -np.sin(2 * pi * y) * np.cos(2 * pi * x),
            r=4.0,
            q=periodic_q,
        ),
        exact_solution=per_exact,
    )

    registry = {}
    for case in (dirichlet_exp, neumann_sine, periodic_sine):
        _self_check(case)
        registry[case.name] = case
    return registry


# ---------------------------------------------------------------------------
# End-to-end runs

def build_system(case: ProblemCase, g: Grid2D) -> SparseSystem:
    kind = case.boundary.kind
    if kind == "dirichlet":
        return assemble_dirichlet(g, case.coefficients, case.boundary.boundary_values)
    if kind == "neumann":
        return assemble_neumann(g, case.coefficients)
    return assemble_periodic(g, case.coefficients)


def solution_grid(case: ProblemCase, g: Grid2D, vector: np.ndarray) -> np.ndarray:
    """Reshape a solution vector onto the full node grid, replicating the periodic seam."""
    if case.boundary.kind == "periodic":
        full = np.empty((g.M1 + 1, g.M2 + 1))
        cell = vector.reshape(g.M1, g.M2)
        full[: g.M1, : g.M2] = cell
        full[g.M1, : g.M2] = cell[0, :]
        full[:, g.M2] = full[:, 0]
        return full
    return vector.reshape(g.M1 + 1, g.M2 + 1)


def nodal_exact(case: ProblemCase, g: Grid2D) -> np.ndarray:
    X, Y = g.meshgrid()
    return _eval_field(case.exact_solution, X, Y)


def grid_errors(g: Grid2D, fh: np.ndarray, exact: np.ndarray) -> tuple[float, float]:
    """Max and (h1*h2-weighted) L2 error over ALL nodes, boundary included."""
    diff = np.abs(fh - exact)
    return float(np.max(diff)), float(math.sqrt(g.h1 * g.h2 * np.sum(diff * diff)))


def refinement_rate(err_coarse: float, h_coarse: float, err_fine: float, h_fine: float) -> float:
    return math.log(err_coarse / err_fine) / math.log(h_coarse / h_fine)


def run_case(
    case: ProblemCase,
    cfg: SolveConfig | None = None,
    grids=None,
    collect: list | None = None,
) -> list[ErrorRow]:
    """Assemble and solve the case over its grid sequence, tabulating errors and rates.

    Solver non-convergence aborts the remaining grids with a diagnostic row
    (infinite errors, converged=False).  Pass a list as ``collect`` to receive
    a RunArtifact per grid.
    """
    rows: list[ErrorRow] = []
    prev: tuple[float, float, float] | None = None
    for M1, M2 in grids if grids is not None else case.grids:
        g = case.make_grid(M1, M2)
        S = build_system(case, g)
        res = solve(S, cfg)
        fh = solution_grid(case, g, res.solution)
        if collect is not None:
            collect.append(RunArtifact(grid=g, system=S, result=res, solution=fh))
        if not res.converged:
            rows.append(ErrorRow(M1, M2, math.inf, math.inf, converged=False))
            break
        if case.exact_solution is None:
            rows.append(ErrorRow(M1, M2, math.nan, math.nan))
            continue
        err_inf, err_l2 = grid_errors(g, fh, nodal_exact(case, g))
        rate_inf = rate_l2 = None
        if prev is not None:
            h_prev, e_inf_prev, e_l2_prev = prev
            rate_inf = refinement_rate(e_inf_prev, h_prev, err_inf, g.h)
            rate_l2 = refinement_rate(e_l2_prev, h_prev, err_l2, g.h)
        rows.append(ErrorRow(M1, M2, err_inf, err_l2, rate_inf, rate_l2))
        prev = (g.h, err_inf, err_l2)
    return rows


def _fmt_sci(v: float) -> str:
    return np.format_float_scientific(v, precision=5, trim="-", exp_digits=2)


def emit_csv(rows: list[ErrorRow], path) -> None:
    """Write rows as CSV: scientific notation, 6 significant digits, empty missing rates."""
    if not rows:
        raise ValueError("no rows to write")
    with open(path, "w") as fh:
        fh.write("M1,M2,err_inf,rate_inf,err_l2,rate_l2\n")
        for row in rows:
            rate_inf = _fmt_sci(row.rate_inf) if row.rate_inf is not None else ""
            rate_l2 = _fmt_sci(row.rate_l2) if row.rate_l2 is not None else ""
            fh.write(
                f"{row.M1},{row.M2},{_fmt_sci(row.err_inf)},{rate_inf},"
                f"{_fmt_sci(row.err_l2)},{rate_l2}\n"
            )


# ---------------------------------------------------------------------------
# Monte Carlo fixed-point oracle

@dataclass
class MCEstimate:
    mean: float
    stderr: float
    n_paths: int
    truncated: int


class _ChainTables:
    """Per-node transition tables of the discrete branching chain.

    State m transitions by sampling a branch (probabilities w_k), applying its
    discount, then sampling a stencil corner.  Absorbing branches pay the
    boundary data; Dirichlet boundary nodes absorb immediately and Neumann
    boundary nodes hop deterministically to their copy source, mirroring the
    assembled rows one-to-one.
    """

    def __init__(self, case: ProblemCase, g: Grid2D):
        kind = case.boundary.kind
        gc = evaluate_on_grid(case.coefficients, g)
        periodic = kind == "periodic"
        n = g.M1 * g.M2 if periodic else g.n_nodes
        self.n = n
        self.g = g
        self.kind = kind
        self.branch_p = np.zeros((n, 4))
        self.disc = np.ones((n, 4))
        self.absorbed = np.zeros((n, 4), dtype=bool)
        self.payoff = np.zeros((n, 4))
        self.st_nodes = np.zeros((n, 4, 4), dtype=np.int64)
        self.st_w = np.zeros((n, 4, 4))
        self.source = np.zeros(n)
        stride = g.M2 + 1

        def column(node) -> int:
            if periodic:
                return (node.i % g.M1) * g.M2 + (node.j % g.M2)
            return node.flat

        i_range = range(g.M1) if periodic else range(g.M1 + 1)
        j_range = range(g.M2) if periodic else range(g.M2 + 1)
        for i in i_range:
            for j in j_range:
                idx = i * g.M2 + j if periodic else i * stride + j
                x, y = g.node(i, j)
                if not periodic and g.is_boundary(i, j):
                    if kind == "dirichlet":
                        self.branch_p[idx] = 0.25
                        self.absorbed[idx] = True
                        self.payoff[idx] = float(case.boundary.boundary_values(x, y))
                    else:  # neumann copy row: hop to the adjacent interior value
                        if i == 0 or i == g.M1:
                            target = (1 if i == 0 else g.M1 - 1) * stride + j
                        else:
                            target = i * stride + (1 if j == 0 else g.M2 - 1)
                        self.branch_p[idx] = (1.0, 0.0, 0.0, 0.0)
                        self.st_nodes[idx] = target
                        self.st_w[idx, :, 0] = 1.0
                    continue
                nc = gc.at(i, j)
                if kind == "dirichlet":
                    bs = build_branchset_dirichlet(g, nc, (x, y))
                elif kind == "neumann":
                    bs = build_branchset_neumann(g, nc, (x, y))
                else:
                    bs = build_branchset_periodic(g, nc, (x, y))
                self.branch_p[idx] = bs.weights
                self.source[idx] = nc.q * sum(w * br.s for w, br in zip(bs.weights, bs.branches))
                for k, br in enumerate(bs.branches):
                    self.disc[idx, k] = 1.0 / (1.0 + nc.r * br.s)
                    if br.kind is BranchKind.ABSORBED:
                        self.absorbed[idx, k] = True
                        self.payoff[idx, k] = float(case.boundary.boundary_values(*br.endpoint))
                    else:
                        st = interpolation_stencil(g, br.endpoint)
                        for m, (node, w) in enumerate(zip(st.nodes, st.weights)):
                            self.st_nodes[idx, k, m] = column(node)
                            self.st_w[idx, k, m] = w
        self.branch_cum = np.cumsum(self.branch_p, axis=1)
        self.st_cum = np.cumsum(self.st_w, axis=2)

    def start_index(self, i: int, j: int) -> int:
        if self.kind == "periodic":
            return (i % self.g.M1) * self.g.M2 + (j % self.g.M2)
        return i * (self.g.M2 + 1) + j


def mc_oracle(
    case: ProblemCase, g: Grid2D, node: tuple[int, int], n_paths: int, seed: int
) -> MCEstimate:
    """Estimate the scheme's fixed point at a node by simulating its branching chain.

    Paths evolve in lockstep on a counter-based (Philox) stream keyed by
    ``seed``, so results are deterministic.  A path ends when a branch
    absorbs at the boundary or when its accumulated discount falls below
    1e-16 (reflecting/wrapping chains never absorb); paths still alive
    after 1e6 steps are counted as truncated.
    """
    if n_paths < 1:
        raise ValueError("n_paths must be >= 1")
    tables = _ChainTables(case, g)
    start = tables.start_index(*node)
    rng = np.random.Generator(np.random.Philox(seed))
    cur = np.full(n_paths, start, dtype=np.int64)
    weight = np.ones(n_paths)
    acc = np.zeros(n_paths)
    alive = np.ones(n_paths, dtype=bool)
    truncated = 0
    for _ in range(_MC_MAX_STEPS):
        if not alive.any():
            break
        acc[alive] += weight[alive] * tables.source[cur[alive]]
        u1 = rng.random(n_paths)
        k = np.minimum((tables.branch_cum[cur] < u1[:, None]).sum(axis=1), 3)
        d = tables.disc[cur, k]
        absorbing = alive & tables.absorbed[cur, k]
        acc[absorbing] += weight[absorbing] * d[absorbing] * tables.payoff[cur[absorbing], k[absorbing]]
        alive = alive & ~tables.absorbed[cur, k]
        u2 = rng.random(n_paths)
        m = np.minimum((tables.st_cum[cur, k] < u2[:, None]).sum(axis=1), 3)
        weight = np.where(alive, weight * d, weight)
        cur = np.where(alive, tables.st_nodes[cur, k, m], cur)
        alive = alive & (weight > _MC_WEIGHT_CUTOFF)
    else:
        truncated = int(alive.sum())
    stderr = float(np.std(acc, ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    return MCEstimate(mean=float(np.mean(acc)), stderr=stderr, n_paths=n_paths, truncated=truncated)


# ---------------------------------------------------------------------------
# CLI

def _parse_grids(text: str) -> list[tuple[int, int]]:
    grids = []
    for token in text.split(","):
        token = token.strip()
        if "x" in token:
            a, b = token.split("x")
            grids.append((int(a), int(b)))
        else:
            grids.append((int(token), int(token)))
    return grids


def _print_table(rows: list[ErrorRow]) -> None:
    print(f"{'M1':>6} {'M2':>6} {'err_inf':>12} {'rate_inf':>9} {'err_l2':>12} {'rate_l2':>9}")
    for row in rows:
        ri = f"{row.rate_inf:9.4f}" if row.rate_inf is not None else " " * 9
        rl = f"{row.rate_l2:9.4f}" if row.rate_l2 is not None else " " * 9
        flag = "" if row.converged else "  [solver did not converge]"
        print(f"{row.M1:>6} {row.M2:>6} {row.err_inf:12.4e} {ri} {row.err_l2:12.4e} {rl}{flag}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="widestencil",
        description="Convergence studies for the expectation-based wide-stencil elliptic solver.",
    )
    parser.add_argument("--problem", required=True, help="registered problem name")
    parser.add_argument("--grids", default=None, help="comma list, e.g. 20,40,80 (or 20x30)")
    parser.add_argument(
        "--boundary",
        choices=("dirichlet", "neumann", "periodic"),
        default=None,
        help="override the case's boundary treatment (dirichlet uses the exact solution as data)",
    )
    parser.add_argument("--method", choices=("jacobi", "gs", "sor"), default="gs")
    parser.add_argument("--omega", type=float, default=1.5, help="SOR relaxation factor")
    parser.add_argument("--tol", type=float, default=1e-10)
    parser.add_argument("--out", default=None, help="write the table to this CSV path")
    parser.add_argument("--mc-check", type=int, default=0, metavar="N_PATHS",
                        help="cross-check 5 nodes on the first grid against the MC oracle")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--min-rate", type=float, default=None,
                        help="fail unless every observed rate reaches this value")
    args = parser.parse_args(argv)

    registry = register_builtin_problems()
    if args.problem not in registry:
        parser.error(f"unknown problem {args.problem!r}; choose from {sorted(registry)}")
    case = registry[args.problem]
    if args.boundary is not None and args.boundary != case.boundary.kind:
        if args.boundary == "dirichlet":
            if case.exact_solution is None:
                parser.error("dirichlet override needs an exact solution for boundary data")
            override = BoundarySpec("dirichlet", boundary_values=case.exact_solution)
        else:
            override = BoundarySpec(args.boundary)
        case = dataclasses.replace(case, boundary=override)

    grids = _parse_grids(args.grids) if args.grids else None
    cfg = SolveConfig(method=args.method, tol=args.tol, omega=args.omega)
    collect: list[RunArtifact] = []
    rows = run_case(case, cfg, grids, collect)
    _print_table(rows)

    ok = all(row.converged for row in rows)
    if args.min_rate is not None:
        rates = [r for row in rows for r in (row.rate_inf, row.rate_l2) if r is not None]
        if any(r < args.min_rate for r in rates):
            print(f"FAIL: some rate below --min-rate {args.min_rate}")
            ok = False
    if args.out and rows:
        emit_csv(rows, args.out)
        print(f"wrote {args.out}")
    if args.mc_check > 0 and collect:
        art = collect[0]
        g = art.grid
        rng = np.random.default_rng(args.seed)
        for _ in range(5):
            i = int(rng.integers(1, g.M1))
            j = int(rng.integers(1, g.M2))
            est = mc_oracle(case, g, (i, j), args.mc_check, args.seed)
            ref = art.solution[i, j]
            gap = abs(est.mean - ref)
            band = 3.0 * est.stderr
            status = "ok" if gap <= band else "MISMATCH"
            print(
                f"mc-check node ({i},{j}): estimate {est.mean:.6f} +/- {est.stderr:.2e}, "
                f"solver {ref:.6f}, |diff| {gap:.2e} vs 3*stderr {band:.2e} [{status}]"
            )
            if gap > band:
                ok = False
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
