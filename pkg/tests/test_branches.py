import math

import numpy as np
import pytest

from widestencil import (
    BranchKind,
    CoefficientSet,
    branch_displacement,
    branch_weights,
    build_branchset_dirichlet,
    build_branchset_neumann,
    build_branchset_periodic,
    eval_node,
    hitting_time,
    make_grid,
    reflect_coordinate,
    wrap_point,
)
from widestencil.branches import diffusion_pair
from widestencil.errors import InvalidHittingTimeError, ReflectionOvershootError


def constant_set(rho=0.0, sigma1=1.0, sigma2=1.0, b1=0.0, b2=0.0, r=1.0, q=0.0):
    return CoefficientSet(sigma1=sigma1, sigma2=sigma2, rho=rho, b1=b1, b2=b2, r=r, q=q)


def node_coeffs(**kw):
    return eval_node(constant_set(**kw), (0.0, 0.0))


# ---------------------------------------------------------------------------
# displacements

def test_zero_time_displacement_is_zero():
    nc = node_coeffs(rho=0.37, sigma1=1.3, sigma2=0.7, b1=2.0, b2=-1.0)
    for k in (1, 2, 3, 4):
        assert branch_displacement(nc, k, 0.0) == (0.0, 0.0)


def test_symmetric_case_hits_diagonal_neighbors():
    # rho=0 gives alpha=1, beta=-1: offsets (+-sqrt(s), +-sqrt(s))
    nc = node_coeffs(rho=0.0)
    s = 0.04
    rs = math.sqrt(s)
    offsets = [branch_displacement(nc, k, s) for k in (1, 2, 3, 4)]
    assert offsets[0] == pytest.approx((rs, rs), abs=1e-15)
    assert offsets[1] == pytest.approx((rs, -rs), abs=1e-15)
    assert offsets[2] == pytest.approx((-rs, -rs), abs=1e-15)
    assert offsets[3] == pytest.approx((-rs, rs), abs=1e-15)


def test_rho_09_branch2_offsets():
    # beta = sin(t) - cos(t) with t = arcsin(0.9)/2 equals -sqrt(1 - 0.9)
    nc = node_coeffs(rho=0.9)
    t = math.asin(0.9) / 2.0
    expected = math.cos(t) - math.sin(t)  # = -beta
    assert expected == pytest.approx(math.sqrt(0.1), abs=1e-14)
    dx, dy = branch_displacement(nc, 2, 1.0)
    assert dx == pytest.approx(expected, abs=1e-14)
    assert dy == pytest.approx(-expected, abs=1e-14)


def test_sign_pattern_of_the_four_branches():
    nc = node_coeffs(rho=0.4, sigma1=0.8, sigma2=1.7)
    a1, a2 = nc.alpha * nc.sigma1, nc.alpha * nc.sigma2
    b1, b2 = nc.beta * nc.sigma1, nc.beta * nc.sigma2
    assert diffusion_pair(nc, 1) == (a1, a2)
    assert diffusion_pair(nc, 2) == (-b1, b2)
    assert diffusion_pair(nc, 3) == (-a1, -a2)
    assert diffusion_pair(nc, 4) == (b1, -b2)


def test_invalid_branch_id():
    with pytest.raises(ValueError):
        diffusion_pair(node_coeffs(), 5)


# ---------------------------------------------------------------------------
# hitting times

from oracles import bisect_hitting  # noqa: E402  (sampled-trajectory oracle)


def test_center_node_never_exits():
    g = make_grid(0, 1, 0, 1, 20, 20)
    nc = node_coeffs(rho=0.3, sigma1=1.0, sigma2=1.0, b1=0.5, b2=-0.5)
    for k in (1, 2, 3, 4):
        assert hitting_time(g, nc, (0.5, 0.5), k) == g.h


def test_closed_form_near_wall_crossing():
    # rho=1 so alpha = sqrt(2); branch 1 crosses when sqrt(2*s) = d
    g = make_grid(0, 1, 0, 1, 100, 100)
    nc = node_coeffs(rho=1.0, sigma1=1.0, sigma2=1.0)
    s1 = hitting_time(g, nc, (0.99, 0.5), 1)
    assert s1 == pytest.approx(0.01 ** 2 / 2.0, rel=1e-12)


def test_origin_on_boundary_rejected():
    g = make_grid(0, 1, 0, 1, 10, 10)
    with pytest.raises(ValueError):
        hitting_time(g, node_coeffs(), (0.0, 0.5), 1)


def test_hitting_time_matches_bisection_oracle():
    rng = np.random.default_rng(42)
    g_cache = {}
    for _ in range(200):
        M = int(rng.integers(4, 31))
        g = g_cache.setdefault(M, make_grid(0, 1, 0, 1, M, M))
        nc = node_coeffs(
            rho=float(rng.uniform(-1, 1)),
            sigma1=float(rng.uniform(0.2, 2.0)),
            sigma2=float(rng.uniform(0.2, 2.0)),
            b1=float(rng.uniform(-3, 3)),
            b2=float(rng.uniform(-3, 3)),
        )
        i = int(rng.integers(1, M))
        j = int(rng.integers(1, M))
        k = int(rng.integers(1, 5))
        origin = g.node(i, j)
        s = hitting_time(g, nc, origin, k)
        oracle = bisect_hitting(g, nc, origin, k)
        assert abs(s - oracle) < 1e-10, (M, origin, k, s, oracle)


# ---------------------------------------------------------------------------
# weights

def test_equal_times_give_exact_quarter():
    assert branch_weights(0.05, 0.05, 0.05, 0.05) == (0.25, 0.25, 0.25, 0.25)


def test_pairwise_symmetry():
    w = branch_weights(0.02, 0.05, 0.02, 0.05)
    assert w[0] == w[2]
    assert w[1] == w[3]


def test_quotients_for_one_early_stop():
    # s = (h, h, h/4, h) gives (2/9, 1/6, 4/9, 1/6)
    h = 0.05
    w = branch_weights(h, h, h / 4, h)
    assert w == pytest.approx((2 / 9, 1 / 6, 4 / 9, 1 / 6), rel=1e-12)
    s = (h, h, h / 4, h)
    assert sum(w) == pytest.approx(1.0, abs=1e-12)
    assert w[0] * s[0] + w[2] * s[2] == pytest.approx(w[1] * s[1] + w[3] * s[3], abs=1e-12 * h)
    assert w[0] * math.sqrt(s[0]) == pytest.approx(w[2] * math.sqrt(s[2]), abs=1e-12)


def test_nonpositive_time_rejected():
    with pytest.raises(InvalidHittingTimeError):
        branch_weights(0.0, 0.01, 0.01, 0.01)
    with pytest.raises(InvalidHittingTimeError):
        branch_weights(0.01, 0.01, -0.01, 0.01)


def test_weight_identities_on_random_draws():
    rng = np.random.default_rng(7)
    h = 0.05
    for _ in range(10_000):
        s = rng.uniform(1e-6, h, size=4)
        w = branch_weights(*s)
        assert all(wk >= 0.0 for wk in w)
        assert sum(w) == pytest.approx(1.0, abs=1e-12)
        assert w[0] * s[0] + w[2] * s[2] - w[1] * s[1] - w[3] * s[3] == pytest.approx(0.0, abs=1e-12 * h)
        assert w[0] * math.sqrt(s[0]) - w[2] * math.sqrt(s[2]) == pytest.approx(0.0, abs=1e-12)
        assert w[1] * math.sqrt(s[1]) - w[3] * math.sqrt(s[3]) == pytest.approx(0.0, abs=1e-12)


# ---------------------------------------------------------------------------
# Dirichlet branch sets

def test_deep_interior_branchset():
    g = make_grid(0, 1, 0, 1, 20, 20)
    nc = node_coeffs(rho=0.9)
    bs = build_branchset_dirichlet(g, nc, (0.5, 0.5))
    assert bs.weights == (0.25, 0.25, 0.25, 0.25)
    for br in bs.branches:
        assert br.s == g.h
        assert br.kind is BranchKind.INTERIOR
        assert g.x0 < br.endpoint[0] < g.xM1
        assert g.y0 < br.endpoint[1] < g.yM2


def test_strong_drift_absorbs_near_wall():
    g = make_grid(0, 1, 0, 1, 20, 20)
    nc = node_coeffs(rho=0.0, sigma1=0.3, sigma2=0.3, b1=60.0)
    node = g.node(19, 10)
    bs = build_branchset_dirichlet(g, nc, node)
    absorbed = [br for br in bs.branches if br.kind is BranchKind.ABSORBED]
    assert absorbed
    assert any(br.s < g.h for br in absorbed)
    for br in absorbed:
        # snapped onto the boundary: one coordinate sits exactly on a wall
        x, y = br.endpoint
        assert x in (g.x0, g.xM1) or y in (g.y0, g.yM2)
        assert abs(br.s - bisect_hitting(g, nc, node, br.k)) < 1e-10


def test_full_step_landing_on_wall_is_absorbed():
    # exact binary arithmetic: h = 1/8, node x = 7/8, drift b1 = 1 lands on x = 1 at s = h
    g = make_grid(0, 1, 0, 1, 8, 8)
    nc = node_coeffs(rho=1.0, sigma1=0.2, sigma2=0.2, b1=1.0)
    bs = build_branchset_dirichlet(g, nc, g.node(7, 4))
    br2 = bs.branches[1]  # beta = 0: pure drift
    assert br2.kind is BranchKind.ABSORBED
    assert br2.endpoint == (1.0, 0.5)


def test_absorbed_endpoints_stay_in_closed_domain():
    rng = np.random.default_rng(3)
    g = make_grid(0, 1, 0, 1, 10, 10)
    for _ in range(200):
        nc = node_coeffs(
            rho=float(rng.uniform(-1, 1)),
            sigma1=float(rng.uniform(0.5, 2.5)),
            sigma2=float(rng.uniform(0.5, 2.5)),
            b1=float(rng.uniform(-5, 5)),
            b2=float(rng.uniform(-5, 5)),
        )
        node = g.node(int(rng.integers(1, 10)), int(rng.integers(1, 10)))
        bs = build_branchset_dirichlet(g, nc, node)
        for br in bs.branches:
            x, y = br.endpoint
            assert g.x0 <= x <= g.xM1
            assert g.y0 <= y <= g.yM2
            if br.kind is BranchKind.ABSORBED and br.s < g.h:
                assert x in (g.x0, g.xM1) or y in (g.y0, g.yM2)


def test_interior_moment_matching():
    # with all s_k = h and weights 1/4, branch offsets reproduce the drift and
    # covariance of the diffusion: sum w*offset = b*h, centered second moment = h*A*A^T
    rng = np.random.default_rng(11)
    g = make_grid(0, 1, 0, 1, 20, 20)
    rhos = [1.0, -1.0, 0.9] + [float(rng.uniform(-1, 1)) for _ in range(200)]
    for rho in rhos:
        nc = node_coeffs(
            rho=rho,
            sigma1=float(rng.uniform(0.1, 1.0)),
            sigma2=float(rng.uniform(0.1, 1.0)),
            b1=float(rng.uniform(-2, 2)),
            b2=float(rng.uniform(-2, 2)),
        )
        offs = [branch_displacement(nc, k, g.h) for k in (1, 2, 3, 4)]
        mean = (sum(o[0] for o in offs) / 4.0, sum(o[1] for o in offs) / 4.0)
        assert mean[0] == pytest.approx(nc.b1 * g.h, abs=1e-12 * g.h)
        assert mean[1] == pytest.approx(nc.b2 * g.h, abs=1e-12 * g.h)
        cxx = sum((o[0] - nc.b1 * g.h) ** 2 for o in offs) / 4.0
        cyy = sum((o[1] - nc.b2 * g.h) ** 2 for o in offs) / 4.0
        cxy = sum((o[0] - nc.b1 * g.h) * (o[1] - nc.b2 * g.h) for o in offs) / 4.0
        assert cxx == pytest.approx(g.h * nc.sigma1 ** 2, abs=1e-12 * g.h)
        assert cyy == pytest.approx(g.h * nc.sigma2 ** 2, abs=1e-12 * g.h)
        assert cxy == pytest.approx(g.h * nc.rho * nc.sigma1 * nc.sigma2, abs=1e-12 * g.h)


# ---------------------------------------------------------------------------
# Neumann branch sets

def test_reflection_rule_right_wall():
    assert reflect_coordinate(1.0 + 0.03, 0.0, 1.0) == pytest.approx(0.97, abs=1e-15)
    assert reflect_coordinate(-0.1, 0.0, 1.0) == pytest.approx(0.1, abs=1e-15)
    assert reflect_coordinate(0.4, 0.0, 1.0) == 0.4


def test_reflection_is_involution_on_overshoot_band():
    for x in np.linspace(1.0 + 1e-6, 1.9, 50):
        y = reflect_coordinate(x, 0.0, 1.0)
        assert 2.0 * 1.0 - y == pytest.approx(x, abs=4e-16)


def test_neumann_branchset_reflects_both_coordinates():
    g = make_grid(0, 1, 0, 1, 10, 10)
    nc = node_coeffs(rho=0.0, sigma1=1.2, sigma2=1.2)  # offsets ~0.38 > h from corner node
    bs = build_branchset_neumann(g, nc, g.node(1, 1))
    assert bs.weights == (0.25, 0.25, 0.25, 0.25)
    br3 = bs.branches[2]  # branch 3 moves down-left past both walls
    assert br3.kind is BranchKind.REFLECTED
    dx, dy = branch_displacement(nc, 3, g.h)
    px, py = 0.1 + dx, 0.1 + dy
    assert br3.endpoint == (2 * g.x0 - px, 2 * g.y0 - py)
    for br in bs.branches:
        assert br.s == g.h
        assert g.x0 <= br.endpoint[0] <= g.xM1
        assert g.y0 <= br.endpoint[1] <= g.yM2


def test_interior_neumann_proposal_unchanged():
    g = make_grid(0, 1, 0, 1, 10, 10)
    nc = node_coeffs(rho=0.2, sigma1=0.3, sigma2=0.3)
    bs = build_branchset_neumann(g, nc, (0.5, 0.5))
    for k, br in zip((1, 2, 3, 4), bs.branches):
        dx, dy = branch_displacement(nc, k, g.h)
        assert br.endpoint == (0.5 + dx, 0.5 + dy)
        assert br.kind is BranchKind.INTERIOR


def test_neumann_overshoot_is_an_error():
    g = make_grid(0, 1, 0, 1, 10, 10)
    nc = node_coeffs(b1=30.0)  # b1*h = 3 jumps past one full reflection
    with pytest.raises(ReflectionOvershootError):
        build_branchset_neumann(g, nc, (0.5, 0.5))


# ---------------------------------------------------------------------------
# periodic branch sets

def test_wrap_examples():
    g = make_grid(0, 1, 0, 1, 10, 10)
    assert wrap_point(g, 1.25, -0.1) == pytest.approx((0.25, 0.9), abs=1e-15)
    assert wrap_point(g, 0.37, 0.62) == (0.37, 0.62)  # identity on the fundamental cell
    assert wrap_point(g, 1.0, 0.5) == (0.0, 0.5)  # seam maps to the left edge


def test_wrap_point_general_domain():
    g = make_grid(-1, 3, 2, 4, 8, 8)
    x, y = wrap_point(g, 3.5, 1.5)
    assert x == pytest.approx(-0.5, abs=1e-14)
    assert y == pytest.approx(3.5, abs=1e-14)


def test_periodic_branchset_wraps():
    g = make_grid(0, 1, 0, 1, 10, 10)
    nc = node_coeffs(rho=0.0, sigma1=1.2, sigma2=1.2)
    bs = build_branchset_periodic(g, nc, g.node(0, 0))
    assert bs.weights == (0.25, 0.25, 0.25, 0.25)
    assert any(br.kind is BranchKind.WRAPPED for br in bs.branches)
    for br in bs.branches:
        assert br.s == g.h
        assert g.x0 <= br.endpoint[0] < g.xM1 or br.endpoint[0] == g.x0
        assert g.y0 <= br.endpoint[1] < g.yM2 or br.endpoint[1] == g.y0
