import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlg.exceptions import GridMismatchError
from nlg.grid import (BoundaryTrace, Grid, ScalarField, VectorField, boundary_integral,
                      boundary_lump, cell_pairs, divergence, from_cell_pairs, gradient,
                      inner, mean_zero, normal_trace, square_flow, with_normal_trace)


def random_fields(grid, seed):
    r = np.random.default_rng(seed)
    u = ScalarField(grid, r.normal(size=grid.shape))
    F = VectorField(grid, r.normal(size=(grid.ny, grid.nx + 1)), r.normal(size=(grid.ny + 1, grid.nx)))
    return u, F


@settings(max_examples=40, deadline=None)
@given(nx=st.integers(2, 12), ny=st.integers(2, 12), hx=st.floats(0.05, 3), hy=st.floats(0.05, 3),
       seed=st.integers(0, 2**31))
def test_summation_by_parts(nx, ny, hx, hy, seed):
    grid = Grid(nx, ny, hx, hy)
    u, F = random_fields(grid, seed)
    lhs = boundary_integral(normal_trace(F), u)
    rhs = inner(u, divergence(F)) + inner(F, gradient(u))
    scale = 1 + abs(lhs) + abs(inner(u, divergence(F)))
    assert abs(lhs - rhs) <= 1e-12 * scale * (nx + ny) ** 2


@settings(max_examples=25, deadline=None)
@given(nx=st.integers(2, 10), ny=st.integers(2, 10), c=st.floats(-5, 5), seed=st.integers(0, 999))
def test_gradient_kills_constants_and_divergence_of_gradient_integrates_to_zero(nx, ny, c, seed):
    grid = Grid(nx, ny, 1.0 / nx, 1.0 / ny)
    u, _ = random_fields(grid, seed)
    G = gradient(u + c) - gradient(u)
    assert G.max_abs() < 1e-12 * (1 + abs(c)) * max(nx, ny)
    assert abs(divergence(gradient(u)).integral()) < 1e-10


def test_gradient_of_linear_function_is_exact(grid8):
    X, Y = grid8.cell_centers()
    u = ScalarField(grid8, 2 * X - 3 * Y)
    G = gradient(u)
    np.testing.assert_allclose(G.x[:, 1:-1], 2.0)
    np.testing.assert_allclose(G.y[1:-1, :], -3.0)
    # boundary faces carry no gradient
    assert not G.x[:, [0, -1]].any() and not G.y[[0, -1], :].any()


def test_constant_field_is_divergence_free_with_unit_flux(grid8):
    F = grid8.constant_vector(1.0, 0.0)
    assert np.abs(divergence(F).values).max() < 1e-12
    np.testing.assert_array_equal(normal_trace(F).values, square_flow(grid8).values)


def test_boundary_ordering_and_normals():
    grid = Grid(3, 2, 1.0, 1.0)
    sl = grid.boundary_slices()
    assert [sl[k].start for k in ("bottom", "right", "top", "left")] == [0, 3, 5, 8]
    nu = grid.boundary_normals()
    np.testing.assert_array_equal(nu[sl["bottom"]], [[0, -1]] * 3)
    np.testing.assert_array_equal(nu[sl["left"]], [[-1, 0]] * 2)
    pts = grid.boundary_face_centers()
    np.testing.assert_allclose(pts[sl["top"]][:, 0], [0.5, 1.5, 2.5])


def test_boundary_integral_of_constant_trace_is_perimeter():
    grid = Grid(4, 6, 0.5, 0.25)
    one = BoundaryTrace(grid, np.ones(grid.n_boundary))
    assert one.integral() == pytest.approx(2 * (2.0 + 1.5))
    u = ScalarField(grid, np.ones(grid.shape))
    assert boundary_integral(one, u) == pytest.approx(7.0)
    assert boundary_lump(one).sum() == pytest.approx(7.0)


def test_with_normal_trace_round_trip(grid8, rng):
    _, F = random_fields(grid8, 3)
    t = BoundaryTrace(grid8, rng.normal(size=grid8.n_boundary))
    np.testing.assert_array_equal(normal_trace(with_normal_trace(F, t)).values, t.values)


def test_cell_pairs_round_trip(grid8):
    _, F = random_fields(grid8, 5)
    G = from_cell_pairs(cell_pairs(F), grid8, base=F)
    np.testing.assert_array_equal(G.x, F.x)
    np.testing.assert_array_equal(G.y, F.y)


def test_mean_zero(grid8, rng):
    u = ScalarField(grid8, rng.normal(size=grid8.shape) + 4)
    assert abs(mean_zero(u).values.mean()) < 1e-15


@pytest.mark.parametrize("nx,ny,hx,hy", [(1, 4, 1, 1), (4, 1, 1, 1), (4, 4, 0, 1), (4, 4, 1, -1),
                                          (4, 4, float("inf"), 1)])
def test_invalid_grids(nx, ny, hx, hy):
    with pytest.raises(ValueError):
        Grid(nx, ny, hx, hy)


def test_fields_validate_shape_and_finiteness(grid8):
    with pytest.raises(ValueError):
        ScalarField(grid8, np.zeros((3, 3)))
    with pytest.raises(ValueError):
        ScalarField(grid8, np.full(grid8.shape, np.nan))
    u = ScalarField(grid8, np.zeros(grid8.shape))
    with pytest.raises(ValueError):
        u.values[0, 0] = 1.0


def test_mixing_grids_is_rejected(grid8):
    other = Grid.unit_square(4)
    with pytest.raises(GridMismatchError):
        grid8.zeros_scalar() + other.zeros_scalar()
    with pytest.raises(GridMismatchError):
        boundary_integral(square_flow(other), grid8.zeros_scalar())
