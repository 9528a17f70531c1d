import pytest

from widestencil import make_grid, locate_cell
from widestencil.errors import OutOfDomainError


def test_unit_grid_spacings():
    g = make_grid(0, 1, 0, 1, 20, 20)
    assert g.h1 == g.h2 == g.h == 0.05


def test_min_rule_for_h():
    g = make_grid(0, 1, 0, 2, 10, 10)
    assert g.h1 == 0.1
    assert g.h2 == 0.2
    assert g.h == 0.1


def test_rejects_degenerate_cell_counts():
    with pytest.raises(ValueError):
        make_grid(0, 1, 0, 1, 1, 10)


@pytest.mark.parametrize("bounds", [(1, 0, 0, 1), (0, 1, 1, 1), (0, 0, 0, 1)])
def test_rejects_nonpositive_extents(bounds):
    x0, x1, y0, y1 = bounds
    with pytest.raises(ValueError):
        make_grid(x0, x1, y0, y1, 4, 4)


def test_node_coordinates():
    g = make_grid(-1, 2, 0.5, 3.5, 6, 10)
    assert g.node(0, 0) == (-1, 0.5)
    assert g.node(6, 10) == (2, 3.5)
    x, y = g.node(2, 3)
    assert x == pytest.approx(-1 + 2 * 0.5)
    assert y == pytest.approx(0.5 + 3 * 0.3)


def test_locate_cell_interior_point():
    g = make_grid(0, 1, 0, 1, 10, 10)
    (i, j), (u, v) = locate_cell(g, (0.23, 0.47))
    assert (i, j) == (2, 4)
    assert u == pytest.approx(0.3, abs=1e-12)
    assert v == pytest.approx(0.7, abs=1e-12)


def test_locate_cell_clamps_at_far_corner():
    g = make_grid(0, 1, 0, 1, 10, 10)
    (i, j), (u, v) = locate_cell(g, (1.0, 1.0))
    assert (i, j) == (9, 9)
    assert (u, v) == (1.0, 1.0)


def test_locate_cell_origin_corner():
    g = make_grid(0, 1, 0, 1, 10, 10)
    (i, j), (u, v) = locate_cell(g, (0.0, 0.0))
    assert (i, j) == (0, 0)
    assert (u, v) == (0.0, 0.0)


@pytest.mark.parametrize("spec", [(0, 1, 0, 1, 7, 5), (-1, 2, 0.5, 3, 9, 11), (0.1, 0.9, -2, -1, 4, 6)])
def test_locate_cell_exact_on_every_node(spec):
    g = make_grid(*spec)
    for i in range(g.M1 + 1):
        for j in range(g.M2 + 1):
            _, (u, v) = locate_cell(g, g.node(i, j))
            assert u in (0.0, 1.0)
            assert v in (0.0, 1.0)


def test_flat_index_round_trip():
    g = make_grid(0, 1, 0, 2, 5, 8)
    seen = set()
    for i in range(g.M1 + 1):
        for j in range(g.M2 + 1):
            flat = g.flat_index(i, j)
            assert 0 <= flat < g.n_nodes
            assert g.ij_from_flat(flat) == (i, j)
            seen.add(flat)
    assert len(seen) == g.n_nodes


def test_locate_cell_rejects_far_exterior_points():
    g = make_grid(0, 1, 0, 1, 10, 10)
    with pytest.raises(OutOfDomainError):
        locate_cell(g, (1.01, 0.5))
    with pytest.raises(OutOfDomainError):
        locate_cell(g, (0.5, -1e-9))


def test_locate_cell_tolerates_roundoff_overshoot():
    g = make_grid(0, 1, 0, 1, 10, 10)
    (i, j), (u, v) = locate_cell(g, (1.0 + 5e-13, 0.5))
    assert i == 9
    assert u == 1.0


def test_meshgrid_matches_node_formula():
    g = make_grid(0, 1, 0, 2, 5, 4)
    X, Y = g.meshgrid()
    for i in range(g.M1 + 1):
        for j in range(g.M2 + 1):
            assert (X[i, j], Y[i, j]) == g.node(i, j)
