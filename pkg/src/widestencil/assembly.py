"""Sparse linear systems T*F = b for the three boundary treatments.

All three assemblies share one layout: one row per unknown node, a
distinguished positive diagonal, and nonpositive off-diagonal entries
from the branch/stencil couplings, so T is an M-matrix and the solve is
positivity preserving.  Dirichlet and Neumann systems carry every grid
node as an unknown (boundary rows are identity rows with boundary data,
resp. copy rows); the periodic system's unknowns are the fundamental-cell
nodes 0 <= i < M1, 0 <= j < M2, with seam nodes aliased by wrapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .branches import (
    build_branchset_dirichlet,
    build_branchset_neumann,
    build_branchset_periodic,
    BranchKind,
)
from .coefficients import CoefficientSet, _eval_field, as_field, evaluate_on_grid
from .errors import CoefficientAssumptionError, SeamMismatchError
from .grid import Grid2D
from .interpolation import interpolation_stencil

_SEAM_TOL = 1e-10


@dataclass
class SparseSystem:
    """Square sparse system in CSR layout with the diagonal tracked per row."""

    n: int
    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    diag: np.ndarray
    diag_pos: np.ndarray
    rhs: np.ndarray

    def as_csr(self) -> sp.csr_matrix:
        return sp.csr_matrix((self.data, self.indices, self.indptr), shape=(self.n, self.n))

    def row_entries(self, i: int):
        lo, hi = self.indptr[i], self.indptr[i + 1]
        return zip(self.indices[lo:hi], self.data[lo:hi])

    def row_sums(self) -> np.ndarray:
        return np.add.reduceat(self.data, self.indptr[:-1])

    def dump(self, path) -> None:
        """Write 'row col value' triplets plus the rhs, 17 significant digits."""
        with open(path, "w") as fh:
            for i in range(self.n):
                for col, val in self.row_entries(i):
                    fh.write(f"{i} {col} {val:.16e}\n")
            for i in range(self.n):
                fh.write(f"rhs {i} {self.rhs[i]:.16e}\n")


@dataclass(frozen=True)
class BoundarySpec:
    """Boundary treatment: 'dirichlet' (with data), 'neumann' (homogeneous), or 'periodic'."""

    kind: str
    boundary_values: Optional[Callable[[float, float], float]] = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "periodic"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "dirichlet" and self.boundary_values is None:
            raise ValueError("dirichlet boundary requires boundary_values")


class _Builder:
    """Accumulates CSR rows in ascending row order, merging duplicate columns."""

    def __init__(self, n: int):
        self.n = n
        self.indptr = np.zeros(n + 1, dtype=np.int32)
        self.cols: list[int] = []
        self.vals: list[float] = []
        self.diag = np.zeros(n)
        self.diag_pos = np.zeros(n, dtype=np.int32)
        self.rhs = np.zeros(n)
        self._row = 0

    def add_row(self, entries: dict[int, float], rhs: float) -> None:
        row = self._row
        cols = sorted(entries)
        start = len(self.cols)
        self.cols.extend(cols)
        self.vals.extend(entries[c] for c in cols)
        self.indptr[row + 1] = len(self.cols)
        self.diag[row] = entries[row]
        self.diag_pos[row] = start + cols.index(row)
        self.rhs[row] = rhs
        self._row += 1

    def finish(self) -> SparseSystem:
        assert self._row == self.n
        return SparseSystem(
            n=self.n,
            indptr=self.indptr,
            indices=np.asarray(self.cols, dtype=np.int32),
            data=np.asarray(self.vals, dtype=np.float64),
            diag=self.diag,
            diag_pos=self.diag_pos,
            rhs=self.rhs,
        )


def _q_array(g: Grid2D, gc, q):
    if q is None:
        return gc.q
    X, Y = g.meshgrid()
    return _eval_field(as_field(q), X, Y)


def assemble_dirichlet(
    g: Grid2D,
    c: CoefficientSet,
    boundary_values: Callable[[float, float], float],
    q=None,
) -> SparseSystem:
    """Assemble the boundary-stopped scheme over all grid nodes.

    Boundary rows are identities pinned to the boundary data.  Each interior
    row starts from a unit diagonal; an interior branch k contributes
    -w_k * l_m / (1 + r*s_k) at its four stencil columns (self-references
    fold into the diagonal), an absorbed branch contributes
    w_k / (1 + r*s_k) * f_boundary(endpoint) to the right-hand side, and the
    source enters as q * sum_k w_k * s_k.
    """
    gc = evaluate_on_grid(c, g)
    q_arr = _q_array(g, gc, q)
    b = _Builder(g.n_nodes)
    stride = g.M2 + 1
    for i in range(g.M1 + 1):
        for j in range(g.M2 + 1):
            idx = i * stride + j
            x, y = g.node(i, j)
            if g.is_boundary(i, j):
                b.add_row({idx: 1.0}, float(boundary_values(x, y)))
                continue
            nc = gc.at(i, j)
            bs = build_branchset_dirichlet(g, nc, (x, y))
            entries = {idx: 1.0}
            rhs = 0.0
            weighted_time = 0.0
            for br, w in zip(bs.branches, bs.weights):
                disc = w / (1.0 + nc.r * br.s)
                weighted_time += w * br.s
                if br.kind is BranchKind.ABSORBED:
                    rhs += disc * float(boundary_values(*br.endpoint))
                else:
                    st = interpolation_stencil(g, br.endpoint)
                    for node, l in zip(st.nodes, st.weights):
                        entries[node.flat] = entries.get(node.flat, 0.0) - disc * l
            rhs += q_arr[i, j] * weighted_time
            b.add_row(entries, rhs)
    return b.finish()


def assemble_neumann(g: Grid2D, c: CoefficientSet, q=None) -> SparseSystem:
    """Assemble the reflecting scheme; requires r > 0 at every node.

    Interior rows couple the four reflected full-step branches with weight
    l_m / (4 (1 + r*h)) and carry rhs q*h.  Boundary rows copy the adjacent
    interior value (x-direction copies take precedence at corners, whose
    targets chain into the interior through the y-copies).
    """
    gc = evaluate_on_grid(c, g)
    if np.any(gc.r <= 0.0):
        raise CoefficientAssumptionError("reflecting scheme requires r > 0 at every node")
    q_arr = _q_array(g, gc, q)
    b = _Builder(g.n_nodes)
    stride = g.M2 + 1
    for i in range(g.M1 + 1):
        for j in range(g.M2 + 1):
            idx = i * stride + j
            if i == 0 or i == g.M1:
                neighbor = (1 if i == 0 else g.M1 - 1) * stride + j
                b.add_row({idx: 1.0, neighbor: -1.0}, 0.0)
                continue
            if j == 0 or j == g.M2:
                neighbor = i * stride + (1 if j == 0 else g.M2 - 1)
                b.add_row({idx: 1.0, neighbor: -1.0}, 0.0)
                continue
            x, y = g.node(i, j)
            nc = gc.at(i, j)
            bs = build_branchset_neumann(g, nc, (x, y))
            disc = 0.25 / (1.0 + nc.r * g.h)
            entries = {idx: 1.0}
            for br in bs.branches:
                st = interpolation_stencil(g, br.endpoint)
                for node, l in zip(st.nodes, st.weights):
                    entries[node.flat] = entries.get(node.flat, 0.0) - disc * l
            b.add_row(entries, q_arr[i, j] * g.h)
    return b.finish()


def _check_seam(c: CoefficientSet, g: Grid2D) -> None:
    xs, ys = g.xs(), g.ys()
    fields = ("sigma1", "sigma2", "rho", "b1", "b2", "r", "q")
    for name in fields:
        fn = getattr(c, name)
        left = _eval_field(fn, np.full_like(ys, g.x0), ys)
        right = _eval_field(fn, np.full_like(ys, g.xM1), ys)
        bottom = _eval_field(fn, xs, np.full_like(xs, g.y0))
        top = _eval_field(fn, xs, np.full_like(xs, g.yM2))
        for a, bb, axis in ((left, right, "x"), (bottom, top, "y")):
            scale = max(1.0, float(np.max(np.abs(a))), float(np.max(np.abs(bb))))
            gap = float(np.max(np.abs(a - bb)))
            if gap > _SEAM_TOL * scale:
                raise SeamMismatchError(
                    f"coefficient {name!r} differs across the {axis}-seam by {gap:.3e}"
                )


def assemble_periodic(g: Grid2D, c: CoefficientSet, q=None) -> SparseSystem:
    """Assemble the wrapped scheme on the fundamental cell.

    Unknowns exclude the seam nodes i = M1 and j = M2 (they alias i = 0 and
    j = 0); stencil corners touching the seam are remapped modulo the period.
    Requires r > 0 and coefficient agreement across the seam.
    """
    _check_seam(c, g)
    gc = evaluate_on_grid(c, g)
    if np.any(gc.r <= 0.0):
        raise CoefficientAssumptionError("periodic scheme requires r > 0 at every node")
    q_arr = _q_array(g, gc, q)
    n = g.M1 * g.M2
    b = _Builder(n)
    for i in range(g.M1):
        for j in range(g.M2):
            idx = i * g.M2 + j
            x, y = g.node(i, j)
            nc = gc.at(i, j)
            bs = build_branchset_periodic(g, nc, (x, y))
            disc = 0.25 / (1.0 + nc.r * g.h)
            entries = {idx: 1.0}
            for br in bs.branches:
                st = interpolation_stencil(g, br.endpoint)
                for node, l in zip(st.nodes, st.weights):
                    col = (node.i % g.M1) * g.M2 + (node.j % g.M2)
                    entries[col] = entries.get(col, 0.0) - disc * l
            b.add_row(entries, q_arr[i, j] * g.h)
    return b.finish()


@dataclass(frozen=True)
class MMatrixReport:
    """Outcome of the four structural checks guaranteeing a nonnegative inverse."""

    diagonal_positive: bool
    offdiagonal_nonpositive: bool
    row_sums_nonnegative: bool
    has_strictly_positive_row_sum: bool
    min_diagonal: float
    max_offdiagonal: float
    min_row_sum: float
    max_row_sum: float
    row_sum_threshold: float

    @property
    def passed(self) -> bool:
        return (
            self.diagonal_positive
            and self.offdiagonal_nonpositive
            and self.row_sums_nonnegative
            and self.has_strictly_positive_row_sum
        )


def verify_m_matrix(S: SparseSystem, r0: float | None = None, h: float | None = None) -> MMatrixReport:
    """Check diagonal positivity, off-diagonal sign, and row-sum structure.

    When r0 and h are given, the strict-row check uses the scheme's lower
    bound r0*h/(1 + r0*h) on the best row sum; otherwise it only asks for
    one row sum clearly above roundoff.
    """
    offdiag = np.delete(S.data, S.diag_pos)
    sums = S.row_sums()
    if r0 is not None and h is not None:
        threshold = r0 * h / (1.0 + r0 * h) - 1e-12
    else:
        threshold = 1e-12
    return MMatrixReport(
        diagonal_positive=bool(np.all(S.diag > 0.0)),
        offdiagonal_nonpositive=bool(offdiag.size == 0 or np.max(offdiag) <= 1e-14),
        row_sums_nonnegative=bool(np.min(sums) >= -1e-12),
        has_strictly_positive_row_sum=bool(np.max(sums) >= threshold),
        min_diagonal=float(np.min(S.diag)),
        max_offdiagonal=float(np.max(offdiag)) if offdiag.size else 0.0,
        min_row_sum=float(np.min(sums)),
        max_row_sum=float(np.max(sums)),
        row_sum_threshold=threshold,
    )
