import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdat.algebra import BasisKernel, KernelExpr, canonical, reflect
from qdat.grid import SpacetimeGrid
from qdat.propagators import (KernelField, cut_propagator_at, eval_cut_propagator, eval_feynman_momentum,
                              eval_kernel, eval_kernel_at, reflect_field, residual)


def brute_delta_plus(grid, t, x):
    total = 0j
    for n in range(-grid.num_modes // 2 + 1, grid.num_modes // 2 + 1):
        if n == 0:
            continue
        k = 2 * math.pi * n / grid.spatial_extent
        w = abs(k)
        total += np.exp(-1j * (w * t - k * x)) / (2 * w * grid.spatial_extent)
    return total


def test_grid_defaults(grid):
    assert grid.shape == (129, 64)
    assert len(grid.mode_numbers) == 63
    assert 0 not in grid.mode_numbers
    assert grid.is_time_symmetric
    assert grid.t[64] == 0.0
    assert grid.x[32] == 0.0
    np.testing.assert_allclose(grid.dx, 2 * math.pi / 64)


def test_delta_plus_at_origin(grid):
    expected = sum(1 / (2 * abs(2 * math.pi * n / grid.spatial_extent) * grid.spatial_extent)
                   for n in grid.mode_numbers)
    dp = eval_cut_propagator("+", grid)
    assert dp.values[64, 32] == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("t, x", [(0.3, -1.1), (-2.0, 0.7), (3.1, 3.0), (0.0, 0.0)])
def test_delta_plus_matches_mode_sum(grid, t, x):
    assert cut_propagator_at("+", grid, t, x) == pytest.approx(brute_delta_plus(grid, t, x), abs=1e-13)


def test_sampled_and_pointwise_agree(grid):
    dp = eval_cut_propagator("+", grid)
    T, X = np.meshgrid(grid.t, grid.x, indexing="ij")
    np.testing.assert_allclose(dp.values, cut_propagator_at("+", grid, T, X), atol=1e-13)


def test_delta_minus_is_conjugate(grid):
    dp, dm = eval_cut_propagator("+", grid), eval_cut_propagator("-", grid)
    np.testing.assert_array_equal(dm.values, dp.values.conj())


def test_delta_plus_parity(grid):
    # Delta+(-t, -x) = Delta-(t, x)
    dp, dm = eval_cut_propagator("+", grid), eval_cut_propagator("-", grid)
    assert residual(dm, reflect_field(dp)) < 1e-12


def test_bad_sign_rejected(grid):
    with pytest.raises(ValueError):
        eval_cut_propagator("0", grid)


def test_one_is_sum_of_cut_functions_and_real(grid):
    d1 = eval_kernel(canonical("one"), grid)
    dp = eval_cut_propagator("+", grid)
    np.testing.assert_allclose(d1.values, 2 * dp.values.real, atol=1e-13)
    assert residual(d1, reflect_field(d1)) < 1e-12


def test_retarded_and_advanced_support(grid):
    ret = eval_kernel(canonical("ret"), grid).values
    adv = eval_kernel(canonical("adv"), grid).values
    assert np.all(ret[grid.t < 0] == 0)
    assert np.all(adv[grid.t > 0] == 0)


def test_feynman_time_ordering(grid):
    dp = eval_cut_propagator("+", grid).values
    theta = np.where(grid.t > 0, 1.0, np.where(grid.t < 0, 0.0, 0.5))[:, None]
    expected = -1j * theta * dp - 1j * theta[::-1] * dp.conj()
    np.testing.assert_allclose(eval_kernel(canonical("feynman"), grid).values, expected, atol=1e-13)


def test_bar_is_real(grid):
    assert np.abs(eval_kernel(canonical("bar"), grid).values.imag).max() < 1e-13


def test_zero_expression_gives_zero_field(grid):
    assert eval_kernel(KernelExpr.zero(), grid).max_abs() == 0.0


@pytest.mark.parametrize("b", list(BasisKernel))
def test_reflection_rule_per_basis_kernel(grid, b):
    k = KernelExpr.basis(b)
    lhs = reflect_field(eval_kernel(k, grid))
    rhs = eval_kernel(reflect(k), grid)
    assert np.abs(lhs.values - rhs.values).max() < 1e-10 * rhs.max_abs()


def test_cut_reflection(grid):
    dp = eval_kernel(canonical("d_plus"), grid)
    dm = eval_kernel(canonical("d_minus"), grid)
    assert np.abs(dp.values + reflect_field(dm).values).max() / dp.max_abs() < 1e-10


def test_pointwise_matches_sampled_kernel(grid):
    t = np.array([-1.0, 0.0, 2.5])
    x = np.array([0.4, -3.0, 1.2])
    for name in ("feynman", "bar", "ret"):
        field = eval_kernel(canonical(name), grid)
        ti = [int(np.argmin(abs(grid.t - v))) for v in t]
        xi = [int(np.argmin(abs(grid.x - v))) for v in x]
        pts = eval_kernel_at(canonical(name), grid, grid.t[ti], grid.x[xi])
        np.testing.assert_allclose(pts, field.values[ti, xi], atol=1e-12)


coeffs = st.integers(-5, 5)
exprs = st.builds(lambda c: KernelExpr(dict(zip(BasisKernel, c))), st.lists(coeffs, min_size=4, max_size=4))


@settings(max_examples=20, deadline=None)
@given(exprs, st.integers(-3, 3), exprs, st.integers(-3, 3))
def test_eval_is_linear(a, alpha, b, beta):
    g = SpacetimeGrid.uniform(2 * math.pi, 16, -2.0, 2.0, 21)
    lhs = eval_kernel(alpha * a + beta * b, g).values
    rhs = alpha * eval_kernel(a, g).values + beta * eval_kernel(b, g).values
    np.testing.assert_allclose(lhs, rhs, atol=1e-12)


def test_residual_conventions(grid):
    zero = eval_kernel(KernelExpr.zero(), grid)
    f = eval_kernel(canonical("feynman"), grid)
    assert residual(zero, zero) == 0.0
    assert residual(zero, f) == math.inf
    assert residual(f, f) == 0.0
    with pytest.raises(ValueError):
        residual(f, eval_kernel(canonical("feynman"), SpacetimeGrid.uniform(2 * math.pi, 8, -1, 1, 5)))


def test_field_is_read_only_and_finite(grid):
    f = eval_kernel(canonical("feynman"), grid)
    with pytest.raises(ValueError):
        f.values[0, 0] = 1.0
    bad = np.zeros(grid.shape, dtype=complex)
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        KernelField(grid, bad)


def test_csv_export(tmp_path, small_grid):
    f = eval_kernel(canonical("feynman"), small_grid)
    path = tmp_path / "k.csv"
    f.to_csv(path)
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["t", "x", "re", "im"]
    assert len(rows) == 1 + f.values.size
    t, x, re, im = map(float, rows[1])
    assert complex(re, im) == pytest.approx(f.values[0, 0], abs=1e-15)


def test_momentum_route_rejects_nonpositive_epsilon(small_grid):
    for eps in (0.0, -1e-3, float("nan")):
        with pytest.raises(ValueError):
            eval_feynman_momentum(small_grid, eps)


def test_momentum_route_converges_on_small_grid(small_grid):
    exact = eval_kernel(canonical("feynman"), small_grid)
    res = [residual(exact, eval_feynman_momentum(small_grid, e)) for e in (0.1, 0.01, 0.001)]
    assert res[0] > res[1] > res[2]
    assert res[2] < 5e-3


def test_delta_plus_even_in_x(grid):
    dp = eval_cut_propagator("+", grid)
    np.testing.assert_allclose(dp.values, dp.values[:, grid.reflect_index_x()], atol=1e-13)


def test_momentum_route_imaginary_part_at_timelike_points(small_grid):
    g = small_grid
    approx = eval_feynman_momentum(g, 1e-3)
    d1 = eval_kernel(canonical("one"), g).values
    T, X = np.meshgrid(g.t, g.x, indexing="ij")
    timelike = np.abs(T) > np.abs(X) + 0.2
    err = np.abs(approx.values.imag - (-0.5 * d1))[timelike].max()
    assert err < 5e-3 * np.abs(d1).max()
