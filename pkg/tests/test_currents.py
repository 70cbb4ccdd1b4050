import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qdat.algebra import canonical
from qdat.currents import Current, bilinear, make_current, on_shell_amplitudes, spectrum
from qdat.grid import SpacetimeGrid
from qdat.propagators import eval_kernel, eval_kernel_at, reflect_field


def random_current(grid, seed, label="r"):
    rng = np.random.default_rng(seed)
    return Current(grid, rng.normal(size=grid.shape), label)


def brute_bilinear(a, name, b):
    g = a.grid
    w = g.time_weights() * g.dx
    total = 0j
    for i, ti in enumerate(g.t):
        for j, xj in enumerate(g.x):
            for p, tp in enumerate(g.t):
                k = eval_kernel_at(canonical(name), g, ti - tp, xj - g.x)
                total += a.density[i, j] * w[i] * np.sum(k * b.density[p] * w[p])
    return total


def test_gaussian_spectrum_matches_closed_form(grid):
    q, t0, x0, st_, sx = 1.3, 0.4, -0.5, 0.35, 0.3
    c = make_current("gaussian_pulse", dict(q=q, t0=t0, x0=x0, sigma_t=st_, sigma_x=sx), grid)
    s = spectrum(c)
    W, K = np.meshgrid(s.omega, s.k, indexing="ij")
    exact = (q * 2 * math.pi * st_ * sx * np.exp(-(st_ * W) ** 2 / 2 - (sx * K) ** 2 / 2)
             * np.exp(1j * (W * t0 - K * x0)))
    assert np.abs(s.amplitudes - exact).max() < 1e-8 * np.abs(exact).max()


def test_parseval(grid):
    c = random_current(grid, 1)
    s = spectrum(c)
    lhs = s.measure * np.sum(np.abs(s.amplitudes) ** 2)
    rhs = np.sum(c.density ** 2) * grid.dt * grid.dx
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_hermitian_symmetry(grid):
    s = spectrum(random_current(grid, 2))
    m, n = s.amplitudes.shape
    mirrored = s.amplitudes[(-np.arange(m)) % m][:, (-np.arange(n)) % n]
    np.testing.assert_allclose(mirrored, s.amplitudes.conj(), atol=1e-10)
    np.testing.assert_allclose(s.mirrored(), s.amplitudes.conj(), atol=1e-10)


def test_zero_current_has_zero_spectrum(grid):
    c = Current(grid, np.zeros(grid.shape))
    assert np.all(spectrum(c).amplitudes == 0)
    assert np.all(on_shell_amplitudes(c) == 0)


def test_point_event_has_flat_on_shell_spectrum(grid):
    c = make_current("point_event", dict(q=2.0, t0=0.5, x0=1.0), grid)
    i = int(np.argmin(abs(grid.t - 0.5)))
    j = int(np.argmin(abs(grid.x - 1.0)))
    amp = on_shell_amplitudes(c)
    np.testing.assert_allclose(np.abs(amp), 2.0, rtol=1e-12)
    np.testing.assert_allclose(amp, 2.0 * np.exp(-1j * (grid.omega * grid.t[i] - grid.k * grid.x[j])), rtol=1e-12)


def test_static_source_has_no_on_shell_overlap(grid):
    c = make_current("oscillating_source", dict(q=1.0, x0=0.0, sigma_x=0.3, omega0=0.0), grid)
    amp = on_shell_amplitudes(c)
    assert np.abs(amp).max() < 1e-6 * np.abs(spectrum(c).amplitudes).max()


@pytest.mark.parametrize("kind, params", [
    ("bogus", {}),
    ("gaussian_pulse", {"x0": 10.0}),
    ("gaussian_pulse", {"t0": 5.0}),
    ("gaussian_pulse", {"sigma_t": 0.0}),
    ("gaussian_pulse", {"sigma_x": -1.0}),
    ("point_event", {"t0": -4.0}),
    ("oscillating_source", {"omega0": 1000.0}),
])
def test_invalid_currents_rejected(grid, kind, params):
    with pytest.raises(ValueError):
        make_current(kind, params, grid)


def test_current_must_be_real_and_finite(grid):
    with pytest.raises((ValueError, TypeError)):
        Current(grid, np.full(grid.shape, np.nan))
    with pytest.raises((ValueError, TypeError)):
        Current(grid, np.zeros((3, 3)))


@pytest.mark.parametrize("name", ["feynman", "ret", "one", "bar"])
def test_bilinear_matches_quadruple_sum(small_grid, name):
    a, b = random_current(small_grid, 3), random_current(small_grid, 4)
    kernel = eval_kernel(canonical(name), small_grid.lag_grid())
    expected = brute_bilinear(a, name, b)
    for method in ("direct", "fft"):
        assert bilinear(a, kernel, b, method) == pytest.approx(expected, rel=1e-11, abs=1e-12)


def test_fft_and_direct_agree(grid):
    kernel = eval_kernel(canonical("feynman"), grid.lag_grid())
    for seed in range(3):
        a, b = random_current(grid, 10 + seed), random_current(grid, 20 + seed)
        d = bilinear(a, kernel, b, "direct")
        f = bilinear(a, kernel, b, "fft")
        assert abs(d - f) <= 1e-8 * abs(d)


def test_bilinear_of_zero_kernel_is_zero(grid):
    from qdat.algebra import KernelExpr
    k = eval_kernel(KernelExpr.zero(), grid.lag_grid())
    a = random_current(grid, 5)
    assert bilinear(a, k, a) == 0


def test_bilinear_needs_lag_grid(grid):
    a = random_current(grid, 6)
    with pytest.raises(ValueError):
        bilinear(a, eval_kernel(canonical("one"), grid), a)
    with pytest.raises(ValueError):
        bilinear(a, eval_kernel(canonical("one"), grid.lag_grid()), a, method="magic")


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_d1_form_is_real_and_nonnegative(seed):
    g = SpacetimeGrid.uniform(2 * math.pi, 16, -2.0, 2.0, 33)
    a = random_current(g, seed)
    v = bilinear(a, eval_kernel(canonical("one"), g.lag_grid()), a)
    assert abs(v.imag) <= 1e-10 * max(abs(v), 1)
    assert v.real >= -1e-12


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from(["ret", "feynman", "d_plus", "bar"]))
def test_swapping_currents_reflects_kernel(seed, name):
    g = SpacetimeGrid.uniform(2 * math.pi, 16, -2.0, 2.0, 33)
    a, b = random_current(g, seed), random_current(g, seed + 1)
    k = eval_kernel(canonical(name), g.lag_grid())
    lhs = bilinear(a, k, b)
    rhs = bilinear(b, reflect_field(k), a)
    assert abs(lhs - rhs) <= 1e-10 * max(abs(lhs), 1e-300)


def test_swap_turns_retarded_into_advanced(grid):
    a, b = random_current(grid, 7), random_current(grid, 8)
    lag = grid.lag_grid()
    lhs = bilinear(a, eval_kernel(canonical("ret"), lag), b)
    rhs = bilinear(b, eval_kernel(canonical("adv"), lag), a)
    assert lhs == pytest.approx(rhs, rel=1e-10)
