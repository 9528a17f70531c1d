"""Uniform rectangular grids, global node indexing, and point location."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import OutOfDomainError


@dataclass(frozen=True)
class Grid2D:
    """Uniform tensor grid over [x0, xM1] x [y0, yM2] with M1 x M2 cells.

    Node (i, j) sits at (x0 + i*h1, y0 + j*h2) for 0 <= i <= M1,
    0 <= j <= M2.  The scheme step is h = min(h1, h2).
    """

    x0: float
    xM1: float
    y0: float
    yM2: float
    M1: int
    M2: int
    h1: float
    h2: float
    h: float

    @property
    def n_nodes(self) -> int:
        return (self.M1 + 1) * (self.M2 + 1)

    def node(self, i: int, j: int) -> tuple[float, float]:
        return self.x0 + i * self.h1, self.y0 + j * self.h2

    def flat_index(self, i: int, j: int) -> int:
        return i * (self.M2 + 1) + j

    def ij_from_flat(self, flat: int) -> tuple[int, int]:
        return divmod(flat, self.M2 + 1)

    def is_boundary(self, i: int, j: int) -> bool:
        return i == 0 or i == self.M1 or j == 0 or j == self.M2

    def xs(self) -> np.ndarray:
        return self.x0 + self.h1 * np.arange(self.M1 + 1)

    def ys(self) -> np.ndarray:
        return self.y0 + self.h2 * np.arange(self.M2 + 1)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinate arrays of shape (M1+1, M2+1), 'ij' indexing."""
        return np.meshgrid(self.xs(), self.ys(), indexing="ij")


@dataclass(frozen=True)
class NodeIndex:
    """Grid node identified by (i, j) and its flat row index i*(M2+1)+j."""

    i: int
    j: int
    flat: int


def make_grid(x0: float, xM1: float, y0: float, yM2: float, M1: int, M2: int) -> Grid2D:
    """Build a uniform grid; rejects degenerate extents and fewer than 2 cells per axis."""
    if not (xM1 > x0 and yM2 > y0):
        raise ValueError(f"domain extents must be positive, got [{x0},{xM1}]x[{y0},{yM2}]")
    if M1 < 2 or M2 < 2:
        raise ValueError(f"need at least 2 cells per axis, got M1={M1}, M2={M2}")
    h1 = (xM1 - x0) / M1
    h2 = (yM2 - y0) / M2
    return Grid2D(float(x0), float(xM1), float(y0), float(yM2), int(M1), int(M2), h1, h2, min(h1, h2))


def _locate_1d(p: float, lo: float, h: float, M: int) -> tuple[int, float]:
    i = math.floor((p - lo) / h)
    # exact node hits go to the lower-indexed cell for reproducible stencils
    if i >= 1 and p == lo + i * h:
        i -= 1
    i = min(max(i, 0), M - 1)
    if p == lo + i * h:
        u = 0.0
    elif p == lo + (i + 1) * h:
        u = 1.0
    else:
        u = (p - (lo + i * h)) / h
        u = min(max(u, 0.0), 1.0)
    return i, u


def locate_cell(g: Grid2D, p: tuple[float, float]) -> tuple[tuple[int, int], tuple[float, float]]:
    """Locate the cell containing p and its local coordinates (u, v) in [0, 1]^2.

    Points may sit outside the closed rectangle by at most
    1e-12 * max(|xM1|, |yM2|, 1); anything further out is an error.
    """
    px, py = p
    tol = 1e-12 * max(abs(g.xM1), abs(g.yM2), 1.0)
    if not (g.x0 - tol <= px <= g.xM1 + tol and g.y0 - tol <= py <= g.yM2 + tol):
        raise OutOfDomainError(f"point {p} outside [{g.x0},{g.xM1}]x[{g.y0},{g.yM2}]")
    i, u = _locate_1d(px, g.x0, g.h1, g.M1)
    j, v = _locate_1d(py, g.y0, g.h2, g.M2)
    return (i, j), (u, v)
