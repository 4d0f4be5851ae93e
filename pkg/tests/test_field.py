import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from stpod.field import (
    CoefficientField, evaluate, field_from_csv, field_to_csv, load_field, sample_grid,
    save_field, sty_dt_norm, sty_inner, sty_norm, zero_first_column,
)

from conftest import make_gramians, quad_l2_sq, random_field


@st.composite
def fields(draw):
    n_time = draw(st.integers(2, 9))
    n_space = draw(st.integers(3, 9))
    T = draw(st.floats(0.2, 3.0))
    g = make_gramians(n_time, n_space, T=T, interval=(draw(st.floats(-1, 0)), 1.0))
    X = draw(arrays(float, (g.q, g.s), elements=st.floats(-10, 10)))
    return g, CoefficientField(X, g.time_grid, g.space_grid)


@settings(max_examples=60, deadline=None)
@given(fields())
def test_norms_match_quadrature(gf):
    g, f = gf
    assert sty_norm(f, g) ** 2 == pytest.approx(quad_l2_sq(f), rel=1e-10, abs=1e-12)
    assert sty_dt_norm(f, g) ** 2 == pytest.approx(quad_l2_sq(f, d_tau=True), rel=1e-10, abs=1e-10)


def test_inner_product_polarization(rng):
    g = make_gramians(6, 7)
    a, b = random_field(rng, g), random_field(rng, g)
    lhs = sty_inner(a, b, g)
    rhs = 0.25 * (sty_norm(a + b, g) ** 2 - sty_norm(a - b, g) ** 2)
    assert lhs == pytest.approx(rhs, rel=1e-12)
    assert sty_inner(a, a, g) == pytest.approx(sty_norm(a, g) ** 2, rel=1e-13)


def test_vec_is_column_major(rng):
    g = make_gramians(3, 4)
    f = random_field(rng, g)
    np.testing.assert_array_equal(f.vec()[:g.q], f.X[:, 0])


def test_constant_in_time_has_zero_time_derivative(rng):
    g = make_gramians(5, 6)
    X = np.repeat(rng.standard_normal((g.q, 1)), g.s, axis=1)
    f = CoefficientField(X, g.time_grid, g.space_grid)
    assert sty_dt_norm(f, g) == pytest.approx(0.0, abs=1e-12)


def test_evaluate_at_nodes_returns_coefficients(rng):
    g = make_gramians(4, 6)
    f = random_field(rng, g)
    xi = g.space_grid.nodes[1:-1]
    tau = g.time_grid.nodes
    vals = evaluate(f, tau[None, :], xi[:, None])
    np.testing.assert_allclose(vals, f.X, atol=1e-14)
    assert evaluate(f, 0.3, 0.0) == 0.0  # Dirichlet boundary
    np.testing.assert_allclose(sample_grid(f, xi, tau), f.X, atol=1e-14)


def test_evaluate_bilinear_between_nodes(rng):
    g = make_gramians(3, 3)  # one interior space node, two time cells
    f = CoefficientField([[1.0, 3.0, -1.0]], g.time_grid, g.space_grid)
    assert evaluate(f, 0.25, 0.5) == pytest.approx(2.0)
    assert evaluate(f, 0.25, 0.25) == pytest.approx(1.0)


def test_shape_validation_and_immutability(rng):
    g = make_gramians(4, 5)
    with pytest.raises(ValueError):
        CoefficientField(np.zeros((4, 4)), g.time_grid, g.space_grid)
    f = random_field(rng, g)
    with pytest.raises(ValueError):
        f.X[0, 0] = 1.0
    other = random_field(rng, make_gramians(4, 5, T=2.0))
    with pytest.raises(ValueError):
        f - other
    with pytest.raises(ValueError):
        sty_norm(f, make_gramians(5, 5))


def test_zero_first_column(rng):
    g = make_gramians(4, 5)
    f = random_field(rng, g)
    z = zero_first_column(f)
    assert np.all(z.X[:, 0] == 0.0)
    np.testing.assert_array_equal(z.X[:, 1:], f.X[:, 1:])


def test_csv_roundtrip_is_bitwise(rng, tmp_path):
    g = make_gramians(7, 9, T=0.3, interval=(-1.0, 2.0))
    f = CoefficientField(rng.standard_normal((g.q, g.s)) * 1e-7, g.time_grid, g.space_grid)
    back = field_from_csv(field_to_csv(f))
    np.testing.assert_array_equal(back.X, f.X)
    assert back.time_grid == f.time_grid and back.space_grid == f.space_grid
    save_field(f, tmp_path / "f.csv")
    np.testing.assert_array_equal(load_field(tmp_path / "f.csv").X, f.X)


def test_csv_rejects_empty():
    with pytest.raises(ValueError):
        field_from_csv("")
