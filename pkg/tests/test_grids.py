import math

import numpy as np
import pytest

from gpground.grids import (
    apply_w,
    apply_wtw,
    as_field,
    build_grid,
    grad_dot,
    inner_h1,
    inner_l2,
    wtw_diagonal,
)
from helpers import dense_w_matrices, dense_wtw


def test_build_grid_1d_coordinates():
    g = build_grid(1, 10.0, 4)
    assert g.spacings == (5.0,)
    np.testing.assert_array_equal(g.axis_coordinates(0), [-10.0, -5.0, 0.0, 5.0])


def test_build_grid_spacing_512():
    g = build_grid(1, 10.0, 2**9)
    assert g.spacings[0] == 20.0 / 512 == 0.0390625


def test_build_grid_2d_quad_weight():
    g = build_grid(2, (10.0, 10.0), (8, 8))
    assert g.n_points == 64
    assert g.quad_weight == pytest.approx(6.25)


@pytest.mark.parametrize(
    "dim,L,n",
    [(0, 10.0, 8), (4, 10.0, 8), (1, -1.0, 8), (1, 0.0, 8), (1, 10.0, 3), (2, (10.0, -2.0), (8, 8))],
)
def test_build_grid_rejects_bad_parameters(dim, L, n):
    with pytest.raises(ValueError):
        build_grid(dim, L, n)


def test_as_field_validates():
    g = build_grid(1, 10.0, 8)
    with pytest.raises(ValueError):
        as_field(g, np.zeros(7))
    with pytest.raises(ValueError):
        as_field(g, [np.nan] * 8)


def test_apply_w_1d_values():
    g = build_grid(1, 2.0, 4)  # spacing 1
    (wx,) = apply_w(g, np.array([1.0, 2.0, 4.0, 8.0]))
    np.testing.assert_allclose(wx, [1.0, 2.0, 4.0])


@pytest.mark.parametrize("shape", [(8,), (5, 6), (4, 5, 6)])
def test_apply_w_constant_is_zero(shape):
    g = build_grid(len(shape), 10.0, shape)
    comps = apply_w(g, np.full(g.n_points, 3.7))
    for c in comps:
        np.testing.assert_allclose(c, 0.0, atol=1e-14)
        assert c.size == g.n_cells


def test_apply_w_2d_index_field():
    g = build_grid(2, 2.0, (4, 4))  # spacing 1 along both axes
    ii, _ = np.meshgrid(np.arange(4), np.arange(4), indexing="ij")
    wx, wy = apply_w(g, ii.astype(float).ravel())
    np.testing.assert_allclose(wx, 1.0)
    np.testing.assert_allclose(wy, 0.0, atol=1e-15)


def test_apply_wtw_spike_pattern():
    g = build_grid(1, 2.0, 4)  # spacing 1
    out = apply_wtw(g, np.array([0.0, 1.0, 0.0, 0.0]))
    np.testing.assert_allclose(out, [-1.0, 2.0, -1.0, 0.0])


@pytest.mark.parametrize("shape", [(8,), (5, 6), (4, 5, 6)])
def test_apply_wtw_matches_dense_oracle(shape):
    g = build_grid(len(shape), 7.0, shape)
    rng = np.random.default_rng(42)
    u = rng.standard_normal(g.n_points)
    expected = dense_wtw(g) @ u
    np.testing.assert_allclose(apply_wtw(g, u), expected, rtol=0, atol=1e-13 * np.abs(expected).max())


@pytest.mark.parametrize("shape", [(8,), (5, 6), (4, 5, 6)])
def test_apply_w_matches_dense_oracle(shape):
    g = build_grid(len(shape), 3.0, shape)
    rng = np.random.default_rng(7)
    u = rng.standard_normal(g.n_points)
    for comp, W in zip(apply_w(g, u), dense_w_matrices(g)):
        np.testing.assert_allclose(comp, W @ u, atol=1e-13)


@pytest.mark.parametrize("shape", [(8,), (6, 7), (4, 4, 5)])
def test_w_adjoint_identity(shape):
    # <Wf, Wg> summed per axis equals <f, WtW g>, unweighted
    g = build_grid(len(shape), 5.0, shape)
    rng = np.random.default_rng(3)
    for _ in range(5):
        f = rng.standard_normal(g.n_points)
        h = rng.standard_normal(g.n_points)
        lhs = grad_dot(g, f, h)
        rhs = float(f @ apply_wtw(g, h))
        assert lhs == pytest.approx(rhs, rel=1e-12)


def test_inner_l2_values():
    g = build_grid(1, 10.0, 4)
    ones = np.ones(4)
    assert inner_l2(g, ones, ones) == pytest.approx(20.0)
    assert inner_l2(g, np.zeros(4), ones) == 0.0


def test_inner_l2_gaussian_quadrature():
    # rectangle rule on a fast-decaying smooth integrand is near machine accurate
    g = build_grid(1, 10.0, 64)
    x = g.axis_coordinates(0)
    f = np.exp(-(x**2))
    assert inner_l2(g, f, f) == pytest.approx(math.sqrt(math.pi / 2), rel=1e-12)


def test_inner_h1_constant():
    g = build_grid(1, 10.0, 4)
    c = 2.5
    f = np.full(4, c)
    assert inner_h1(g, f, f) == pytest.approx(20.0 * c * c)


def test_inner_h1_dominates_l2():
    g = build_grid(2, 4.0, (6, 6))
    rng = np.random.default_rng(11)
    for _ in range(5):
        f = rng.standard_normal(g.n_points)
        assert inner_h1(g, f, f) >= inner_l2(g, f, f) >= 0.0


def test_inner_h1_matches_dense_formula():
    g = build_grid(1, 6.0, 8)
    rng = np.random.default_rng(5)
    f = rng.standard_normal(8)
    h = rng.standard_normal(8)
    dense = g.spacings[0] * float(f @ (np.eye(8) + dense_wtw(g)) @ h)
    assert inner_h1(g, f, h) == pytest.approx(dense, rel=1e-12)


@pytest.mark.parametrize("shape", [(8,), (5, 6), (4, 5, 6)])
def test_wtw_diagonal_matches_dense(shape):
    g = build_grid(len(shape), 5.0, shape)
    np.testing.assert_allclose(wtw_diagonal(g), np.diag(dense_wtw(g)), rtol=1e-12)


def test_flat_index_round_trip():
    g = build_grid(3, 5.0, (4, 5, 6))
    for k in range(g.n_points):
        assert g.flat_index(g.multi_index(k)) == k


def test_boundary_mask_counts():
    g = build_grid(2, 5.0, (6, 6))
    mask = g.boundary_mask()
    assert mask.sum() == 6 * 6 - 4 * 4
    assert not mask.reshape(6, 6)[1:-1, 1:-1].any()


def test_grid_mismatch_rejected():
    g = build_grid(1, 10.0, 8)
    other = np.zeros(9)
    for op in (lambda: apply_w(g, other), lambda: apply_wtw(g, other),
               lambda: inner_l2(g, other, other), lambda: inner_h1(g, other, other)):
        with pytest.raises(ValueError):
            op()
