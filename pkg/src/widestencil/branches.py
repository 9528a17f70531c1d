"""Stochastic branch construction: hitting times, endpoints, and probabilities.

Every interior node spawns four branches.  Branch k displaces the node by

    (b1*s + cx_k*sqrt(s), b2*s + cy_k*sqrt(s)),

where the diffusion pair (cx_k, cy_k) runs through the sign pattern
(+a,+a), (-b,+b), (-a,-a), (+b,-b) applied to (alpha*sigma1, alpha*sigma2)
and (beta*sigma1, beta*sigma2).  Under Dirichlet conditions each branch is
stopped at the first parameter s where its path meets the boundary
(found as roots of a quadratic in u = sqrt(s)), and the four branch
probabilities are closed-form quotients of the hitting times that restore
first- and second-moment consistency with the underlying diffusion.
Neumann branches run the full step and reflect, periodic branches wrap.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .coefficients import NodeCoefficients
from .errors import InvalidHittingTimeError, ReflectionOvershootError
from .grid import Grid2D

_TRIVIAL_ROOT = 1e-14


class BranchKind(enum.Enum):
    INTERIOR = "interior"
    ABSORBED = "boundary-absorbed"
    REFLECTED = "reflected"
    WRAPPED = "wrapped"


@dataclass(frozen=True)
class Branch:
    k: int
    s: float
    endpoint: tuple[float, float]
    kind: BranchKind


@dataclass(frozen=True)
class BranchSet:
    branches: tuple[Branch, Branch, Branch, Branch]
    weights: tuple[float, float, float, float]


def diffusion_pair(nc: NodeCoefficients, k: int) -> tuple[float, float]:
    """Coefficients (cx, cy) multiplying sqrt(s) in branch k's displacement."""
    if k == 1:
        return nc.alpha * nc.sigma1, nc.alpha * nc.sigma2
    if k == 2:
        return -nc.beta * nc.sigma1, nc.beta * nc.sigma2
    if k == 3:
        return -nc.alpha * nc.sigma1, -nc.alpha * nc.sigma2
    if k == 4:
        return nc.beta * nc.sigma1, -nc.beta * nc.sigma2
    raise ValueError(f"branch id must be 1..4, got {k}")


def branch_displacement(nc: NodeCoefficients, k: int, s: float) -> tuple[float, float]:
    """Offset of branch k from its origin after parameter time s."""
    if s < 0.0:
        raise ValueError(f"s must be nonnegative, got {s}")
    cx, cy = diffusion_pair(nc, k)
    rs = math.sqrt(s)
    return nc.b1 * s + cx * rs, nc.b2 * s + cy * rs


def _positive_roots(drift: float, diff: float, gap: float) -> tuple[float, ...]:
    """Positive roots u of drift*u^2 + diff*u + gap = 0, sign-aware for stability.

    Roots within 1e-14 of zero are the trivial 'origin already on the line'
    artifact and are discarded.
    """
    if drift == 0.0:
        if diff == 0.0:
            return ()
        u = -gap / diff
        return (u,) if u > _TRIVIAL_ROOT else ()
    disc = diff * diff - 4.0 * drift * gap
    if disc < 0.0:
        return ()
    sq = math.sqrt(disc)
    qq = -0.5 * ((diff + sq) if diff >= 0.0 else (diff - sq))
    if qq == 0.0:
        return ()  # double root at zero
    u1, u2 = qq / drift, gap / qq
    return tuple(u for u in (u1, u2) if u > _TRIVIAL_ROOT)


def _first_crossing_u(drift: float, diff: float, p0: float, lo: float, hi: float, umax: float):
    """Smallest root u in (0, umax] at which p0 + drift*u^2 + diff*u hits lo or hi."""
    best, wall = math.inf, None
    for boundary in (lo, hi):
        for u in _positive_roots(drift, diff, p0 - boundary):
            if u <= umax and u < best:
                best, wall = u, boundary
    return best, wall


def _hitting_detail(g: Grid2D, nc: NodeCoefficients, origin: tuple[float, float], k: int):
    """Hitting time of branch k plus the boundary value(s) it crossed, if any.

    Returns (s, x_wall, y_wall) where the walls are None for coordinates
    that did not produce the first crossing.  s = h when no coordinate
    crosses within the step.
    """
    ox, oy = origin
    cx, cy = diffusion_pair(nc, k)
    umax = math.sqrt(g.h)
    ux, xwall = _first_crossing_u(nc.b1, cx, ox, g.x0, g.xM1, umax)
    uy, ywall = _first_crossing_u(nc.b2, cy, oy, g.y0, g.yM2, umax)
    u = min(ux, uy)
    if not math.isfinite(u):
        return g.h, None, None
    s = min(u * u, g.h)
    return s, (xwall if ux == u else None), (ywall if uy == u else None)


def hitting_time(g: Grid2D, nc: NodeCoefficients, origin: tuple[float, float], k: int) -> float:
    """First parameter s in (0, h] at which branch k's path leaves the domain, else h."""
    ox, oy = origin
    if not (g.x0 < ox < g.xM1 and g.y0 < oy < g.yM2):
        raise ValueError(f"origin {origin} must be strictly inside the domain")
    return _hitting_detail(g, nc, origin, k)[0]


def branch_weights(s1: float, s2: float, s3: float, s4: float) -> tuple[float, float, float, float]:
    """Branch probabilities from the four hitting times.

    The quotients guarantee w_k >= 0, sum w_k = 1, w1*s1 + w3*s3 = w2*s2 + w4*s4
    and w1*sqrt(s1) = w3*sqrt(s3), w2*sqrt(s2) = w4*sqrt(s4), which is exactly
    the consistency needed to cancel the first-order and mixed-derivative
    truncation terms.  The all-equal case (no early stopping) is the exact
    symmetric value 1/4.
    """
    if s1 <= 0.0 or s2 <= 0.0 or s3 <= 0.0 or s4 <= 0.0:
        raise InvalidHittingTimeError(f"hitting times must be positive, got {(s1, s2, s3, s4)}")
    if s1 == s2 == s3 == s4:
        return 0.25, 0.25, 0.25, 0.25
    a1, a2, a3, a4 = math.sqrt(s1), math.sqrt(s2), math.sqrt(s3), math.sqrt(s4)
    p13 = a1 * a3
    p24 = a2 * a4
    cross = p13 + p24
    d13 = (a1 + a3) * cross
    d24 = (a2 + a4) * cross
    # grouping by the opposite-pair products keeps w1(s)=w3(s) and w2(s)=w4(s)
    # bitwise under the corresponding symmetry of the inputs
    return (
        p24 * a3 / d13,
        p13 * a4 / d24,
        p24 * a1 / d13,
        p13 * a2 / d24,
    )


def _clamp(v: float, lo: float, hi: float) -> float:
    return min(max(v, lo), hi)


def build_branchset_dirichlet(g: Grid2D, nc: NodeCoefficients, node: tuple[float, float]) -> BranchSet:
    """Branches with boundary stopping: early hits are snapped onto the wall.

    A branch is boundary-absorbed when it stops early (s < h) or when its
    full-step endpoint lands on or beyond the boundary; the crossing
    coordinate is snapped exactly to the wall and the other coordinate is
    clamped into the closed domain so payoff evaluation stays inside.
    """
    ox, oy = node
    branches = []
    times = []
    for k in (1, 2, 3, 4):
        s, xwall, ywall = _hitting_detail(g, nc, node, k)
        dx, dy = branch_displacement(nc, k, s)
        ex, ey = ox + dx, oy + dy
        if xwall is not None or ywall is not None:
            ex = xwall if xwall is not None else _clamp(ex, g.x0, g.xM1)
            ey = ywall if ywall is not None else _clamp(ey, g.y0, g.yM2)
            kind = BranchKind.ABSORBED
        elif ex <= g.x0 or ex >= g.xM1 or ey <= g.y0 or ey >= g.yM2:
            # full step ended on or (by roundoff) past the boundary
            ex, ey = _clamp(ex, g.x0, g.xM1), _clamp(ey, g.y0, g.yM2)
            kind = BranchKind.ABSORBED
        else:
            kind = BranchKind.INTERIOR
        branches.append(Branch(k, s, (ex, ey), kind))
        times.append(s)
    return BranchSet(tuple(branches), branch_weights(*times))


def reflect_coordinate(v: float, lo: float, hi: float) -> float:
    """Specular reflection of a single overshooting coordinate."""
    if v < lo:
        return 2.0 * lo - v
    if v > hi:
        return 2.0 * hi - v
    return v


def build_branchset_neumann(g: Grid2D, nc: NodeCoefficients, node: tuple[float, float]) -> BranchSet:
    """Full-step branches with specular reflection at the walls, weights 1/4.

    Each coordinate reflects independently.  A point still outside after one
    reflection means the branch jumped more than a full domain width, which
    signals an inadmissible step: refine the grid.
    """
    ox, oy = node
    branches = []
    for k in (1, 2, 3, 4):
        dx, dy = branch_displacement(nc, k, g.h)
        px, py = ox + dx, oy + dy
        ex = reflect_coordinate(px, g.x0, g.xM1)
        ey = reflect_coordinate(py, g.y0, g.yM2)
        if not (g.x0 <= ex <= g.xM1 and g.y0 <= ey <= g.yM2):
            raise ReflectionOvershootError(
                f"branch {k} from {node} overshoots past one reflection "
                f"(proposal {(px, py)}); refine the grid so coefficients*sqrt(h) shrink"
            )
        kind = BranchKind.REFLECTED if (ex != px or ey != py) else BranchKind.INTERIOR
        branches.append(Branch(k, g.h, (ex, ey), kind))
    return BranchSet(tuple(branches), (0.25, 0.25, 0.25, 0.25))


def wrap_point(g: Grid2D, x: float, y: float) -> tuple[float, float]:
    """Map a point into the fundamental cell [x0, xM1) x [y0, yM2) by coordinate-wise modulus."""
    Lx, Ly = g.xM1 - g.x0, g.yM2 - g.y0
    if g.x0 <= x < g.xM1 and g.y0 <= y < g.yM2:
        return x, y
    zx = (x - g.x0) % Lx
    if zx >= Lx:  # float modulus may round up to the period
        zx = 0.0
    zy = (y - g.y0) % Ly
    if zy >= Ly:
        zy = 0.0
    return g.x0 + zx, g.y0 + zy


def build_branchset_periodic(g: Grid2D, nc: NodeCoefficients, node: tuple[float, float]) -> BranchSet:
    """Full-step branches wrapped into the fundamental cell, weights 1/4."""
    ox, oy = node
    branches = []
    for k in (1, 2, 3, 4):
        dx, dy = branch_displacement(nc, k, g.h)
        px, py = ox + dx, oy + dy
        ex, ey = wrap_point(g, px, py)
        kind = BranchKind.WRAPPED if (ex != px or ey != py) else BranchKind.INTERIOR
        branches.append(Branch(k, g.h, (ex, ey), kind))
    return BranchSet(tuple(branches), (0.25, 0.25, 0.25, 0.25))
