"""PDE coefficient fields, the rotation parametrization, and the strict-positivity transform.

The diffusion matrix is factored as A = [[s1*cos(t), s1*sin(t)], [s2*sin(t), s2*cos(t)]]
with t = arcsin(rho)/2, so that A*A^T has entries (s1^2, rho*s1*s2; rho*s1*s2, s2^2).
The derived quantities alpha = sin(t)+cos(t) and beta = sin(t)-cos(t) satisfy
alpha^2 + beta^2 = 2 and alpha^2 - beta^2 = 2*rho, and drive the four-branch stencil.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import (
    CoefficientAssumptionError,
    DegenerateDiffusionError,
    InvalidCorrelationError,
    TransformUnavailableError,
)
from .grid import Grid2D

Field = Union[Callable[[float, float], float], float, int]

_RHO_SLACK = 1e-12


def as_field(f: Field) -> Callable:
    """Normalize a constant into a callable field of (x, y)."""
    if callable(f):
        return f
    value = float(f)
    return lambda x, y: value + 0.0 * (x + y)  # broadcasts over arrays


@dataclass
class CoefficientSet:
    """Evaluable coefficient fields sigma1, sigma2, rho, b1, b2, r, q.

    Fields are callables of (x, y); plain numbers are accepted and wrapped.
    Evaluation must be pure: the same point always yields the same value.
    """

    sigma1: Field
    sigma2: Field
    rho: Field
    b1: Field
    b2: Field
    r: Field
    q: Field

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "rho", "b1", "b2", "r", "q"):
            setattr(self, name, as_field(getattr(self, name)))


@dataclass(frozen=True)
class NodeCoefficients:
    """All coefficient values frozen at one node, plus theta, alpha, beta."""

    b1: float
    b2: float
    sigma1: float
    sigma2: float
    rho: float
    r: float
    q: float
    theta: float
    alpha: float
    beta: float


def _checked_rho(rho: float) -> float:
    if abs(rho) > 1.0 + _RHO_SLACK:
        raise InvalidCorrelationError(f"rho = {rho} outside [-1, 1]")
    return min(max(rho, -1.0), 1.0)


def eval_node(c: CoefficientSet, p: tuple[float, float]) -> NodeCoefficients:
    """Evaluate every field at p and derive (theta, alpha, beta)."""
    x, y = p
    sigma1 = float(c.sigma1(x, y))
    sigma2 = float(c.sigma2(x, y))
    if sigma1 <= 0.0 or sigma2 <= 0.0:
        raise DegenerateDiffusionError(f"sigma1={sigma1}, sigma2={sigma2} at {p}; both must be > 0")
    rho = _checked_rho(float(c.rho(x, y)))
    theta = math.asin(rho) / 2.0
    st, ct = math.sin(theta), math.cos(theta)
    return NodeCoefficients(
        b1=float(c.b1(x, y)),
        b2=float(c.b2(x, y)),
        sigma1=sigma1,
        sigma2=sigma2,
        rho=rho,
        r=float(c.r(x, y)),
        q=float(c.q(x, y)),
        theta=theta,
        alpha=st + ct,
        beta=st - ct,
    )


def _eval_field(fn: Callable, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """Evaluate a field on coordinate arrays, falling back to elementwise calls."""
    try:
        out = np.asarray(fn(X, Y), dtype=float)
    except (TypeError, ValueError):
        out = np.vectorize(fn, otypes=[float])(X, Y)
    return np.broadcast_to(out, X.shape).astype(float, copy=True) if out.shape != X.shape else out


class GridCoefficients:
    """Coefficient fields pre-evaluated at every node of a grid.

    Arrays have shape (M1+1, M2+1).  ``at(i, j)`` rebuilds the scalar
    NodeCoefficients view used by the per-node branch constructors.
    """

    def __init__(self, grid: Grid2D, c: CoefficientSet):
        X, Y = grid.meshgrid()
        self.grid = grid
        self.sigma1 = _eval_field(c.sigma1, X, Y)
        self.sigma2 = _eval_field(c.sigma2, X, Y)
        if np.any(self.sigma1 <= 0.0) or np.any(self.sigma2 <= 0.0):
            raise DegenerateDiffusionError("sigma1 and sigma2 must be positive at every node")
        rho = _eval_field(c.rho, X, Y)
        if np.any(np.abs(rho) > 1.0 + _RHO_SLACK):
            raise InvalidCorrelationError("rho outside [-1, 1] at some node")
        self.rho = np.clip(rho, -1.0, 1.0)
        self.b1 = _eval_field(c.b1, X, Y)
        self.b2 = _eval_field(c.b2, X, Y)
        self.r = _eval_field(c.r, X, Y)
        if np.any(self.r < 0.0):
            raise CoefficientAssumptionError("r must be nonnegative at every node")
        self.q = _eval_field(c.q, X, Y)
        self.theta = np.arcsin(self.rho) / 2.0
        self.alpha = np.sin(self.theta) + np.cos(self.theta)
        self.beta = np.sin(self.theta) - np.cos(self.theta)

    def at(self, i: int, j: int) -> NodeCoefficients:
        return NodeCoefficients(
            b1=self.b1[i, j],
            b2=self.b2[i, j],
            sigma1=self.sigma1[i, j],
            sigma2=self.sigma2[i, j],
            rho=self.rho[i, j],
            r=self.r[i, j],
            q=self.q[i, j],
            theta=self.theta[i, j],
            alpha=self.alpha[i, j],
            beta=self.beta[i, j],
        )


def evaluate_on_grid(c: CoefficientSet, g: Grid2D) -> GridCoefficients:
    """Evaluate and validate all fields at every grid node."""
    return GridCoefficients(g, c)


def strict_positivity_transform(
    c: CoefficientSet, g: Grid2D
) -> tuple[CoefficientSet, Callable[[float], float], float]:
    """Reformulate the problem so the zeroth-order coefficient is strictly positive.

    When r >= 0 merely vanishes somewhere, substituting f = m(x) * w with
    m(x) = 2 - exp(-a (x - x0)) yields an equivalent problem for w whose
    transformed coefficient r_tilde is strictly positive, provided

        a = 2 (sup |b| + 1) / inf sigma1^2,

    with |b| the Euclidean norm of the drift.  sup and inf are estimated on
    a 4x-refined sampling lattice over the domain, since the fields are
    user-supplied callables.  Returns (transformed set, m, a); solve for w
    with boundary data divided by m, then recover f = m * w pointwise.

    The transform is never applied automatically: callers opt in, so the
    assembled system always matches the coefficients they passed.
    """
    xs = g.x0 + (g.xM1 - g.x0) * np.linspace(0.0, 1.0, 4 * g.M1 + 1)
    ys = g.y0 + (g.yM2 - g.y0) * np.linspace(0.0, 1.0, 4 * g.M2 + 1)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    s1sq = _eval_field(c.sigma1, X, Y) ** 2
    bnorm = np.hypot(_eval_field(c.b1, X, Y), _eval_field(c.b2, X, Y))
    inf_s1sq = float(np.min(s1sq))
    sup_b = float(np.max(bnorm))
    if not math.isfinite(sup_b) or inf_s1sq <= 0.0:
        raise TransformUnavailableError(
            f"need finite sup|b| and positive inf sigma1^2, got {sup_b} and {inf_s1sq}"
        )
    a = 2.0 * (sup_b + 1.0) / inf_s1sq
    x0 = g.x0

    def m(x):
        return 2.0 - np.exp(-a * (x - x0))

    def decay(x):
        return np.exp(-a * (x - x0))

    sigma1, sigma2, rho, b1, b2, r, q = (
        c.sigma1, c.sigma2, c.rho, c.b1, c.b2, c.r, c.q,
    )
    transformed = CoefficientSet(
        sigma1=lambda x, y: np.sqrt(m(x)) * sigma1(x, y),
        sigma2=lambda x, y: np.sqrt(m(x)) * sigma2(x, y),
        rho=rho,
        b1=lambda x, y: sigma1(x, y) ** 2 * a * decay(x) + m(x) * b1(x, y),
        b2=lambda x, y: m(x) * b2(x, y) + rho(x, y) * sigma1(x, y) * sigma2(x, y) * a * decay(x),
        r=lambda x, y: 0.5 * sigma1(x, y) ** 2 * a * a * decay(x)
        - b1(x, y) * a * decay(x)
        + m(x) * r(x, y),
        q=q,
    )
    return transformed, m, a
