"""Positivity-preserving bilinear interpolation stencils."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid2D, NodeIndex, locate_cell


@dataclass(frozen=True)
class Stencil:
    """Four cell-corner nodes and their nonnegative bilinear weights.

    Corner order is (i,j), (i+1,j), (i,j+1), (i+1,j+1) with weights
    (1-u)(1-v), u(1-v), (1-u)v, uv.  Weights are >= 0 and sum to 1,
    which is what makes interpolation positivity preserving.
    """

    nodes: tuple[NodeIndex, NodeIndex, NodeIndex, NodeIndex]
    weights: tuple[float, float, float, float]


def interpolation_stencil(g: Grid2D, p: tuple[float, float]) -> Stencil:
    """Bilinear stencil for a point in the closed domain.

    Raises OutOfDomainError for exterior points: the scheme never
    extrapolates, by construction.
    """
    (i, j), (u, v) = locate_cell(g, p)
    stride = g.M2 + 1
    nodes = (
        NodeIndex(i, j, i * stride + j),
        NodeIndex(i + 1, j, (i + 1) * stride + j),
        NodeIndex(i, j + 1, i * stride + j + 1),
        NodeIndex(i + 1, j + 1, (i + 1) * stride + j + 1),
    )
    weights = ((1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v)
    return Stencil(nodes, weights)


def apply_stencil(st: Stencil, values: np.ndarray) -> float:
    """Evaluate the stencil against nodal values indexed flat."""
    return sum(w * values[n.flat] for n, w in zip(st.nodes, st.weights))
