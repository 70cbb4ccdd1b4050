"""Classical real scalar sources on a spacetime grid and their overlaps."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .grid import SpacetimeGrid
from .propagators import KernelField

__all__ = [
    "Current",
    "CurrentSpectrum",
    "CURRENT_KINDS",
    "make_current",
    "current_from_spec",
    "spectrum",
    "on_shell_amplitudes",
    "bilinear",
]

CURRENT_KINDS = ("point_event", "gaussian_pulse", "oscillating_source")


@dataclass(frozen=True, eq=False)
class Current:
    """Real density j(t_i, x_j) sampled on ``grid``; shape (M, N)."""

    grid: SpacetimeGrid
    density: np.ndarray
    label: str = "j"

    def __post_init__(self):
        d = np.asarray(self.density)
        if np.iscomplexobj(d):
            if np.any(d.imag != 0):
                raise ValueError("current density must be real")
            d = d.real
        d = np.array(d, dtype=float)
        if d.shape != self.grid.shape:
            raise ValueError(f"density shape {d.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("current density has non-finite values")
        d.setflags(write=False)
        object.__setattr__(self, "density", d)

    def scaled(self, factor: float) -> "Current":
        return Current(self.grid, factor * self.density, self.label)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "j"])
            for i, t in enumerate(self.grid.t):
                for j, x in enumerate(self.grid.x):
                    w.writerow([repr(float(t)), repr(float(x)), repr(float(self.density[i, j]))])


@dataclass(frozen=True, eq=False)
class CurrentSpectrum:
    """j~(w, k) = sum_{t,x} j(t, x) exp(i(w t - k x)) dt dx on the DFT grid.

    Axes follow numpy's FFT ordering: ``omega[m] = 2 pi fftfreq(M, dt)``,
    ``k[n] = 2 pi fftfreq(N, dx)``.
    """

    omega: np.ndarray
    k: np.ndarray
    amplitudes: np.ndarray
    measure: float = field(default=1.0)  # d(omega) dk / (2 pi)^2

    def mirrored(self) -> np.ndarray:
        """amplitudes at (-w, -k)."""
        a = self.amplitudes
        return a[np.ix_(-np.arange(a.shape[0]) % a.shape[0], -np.arange(a.shape[1]) % a.shape[1])]


def _nearest(values: np.ndarray, v: float) -> int:
    return int(np.argmin(np.abs(values - v)))


def make_current(kind: str, params: dict, grid: SpacetimeGrid, label: str = "j") -> Current:
    """Build a source of the given kind.

    point_event        q, t0, x0: impulse of total charge q in the nearest cell
    gaussian_pulse     q, t0, x0, sigma_t, sigma_x
    oscillating_source q, x0, sigma_x, omega0: exp(-(x-x0)^2/2 sigma_x^2) cos(omega0 t)
    """
    if kind not in CURRENT_KINDS:
        raise ValueError(f"unknown current kind {kind!r}; expected one of {CURRENT_KINDS}")
    p = dict(params)
    q = float(p.get("q", 1.0))
    t, x = grid.t, grid.x
    half = grid.spatial_extent / 2
    x0 = float(p.get("x0", 0.0))
    if not -half <= x0 < half:
        raise ValueError(f"x0={x0} lies outside the spatial window [{-half}, {half})")
    if kind != "oscillating_source":
        t0 = float(p.get("t0", 0.0))
        if not t[0] <= t0 <= t[-1]:
            raise ValueError(f"t0={t0} lies outside the time window [{t[0]}, {t[-1]}]")
    for key in ("sigma_t", "sigma_x"):
        if key in p and not float(p[key]) > 0:
            raise ValueError(f"{key} must be positive")

    if kind == "point_event":
        i, j = _nearest(t, t0), _nearest(x, x0)
        d = np.zeros(grid.shape)
        d[i, j] = q / (grid.time_weights()[i] * grid.dx)
        return Current(grid, d, label)

    sx = float(p.get("sigma_x", 0.3))
    if not sx > 0:
        raise ValueError("sigma_x must be positive")
    # periodic distance so the envelope is smooth across the box edge
    dxp = (x - x0 + half) % grid.spatial_extent - half
    env_x = np.exp(-dxp ** 2 / (2 * sx ** 2))
    if kind == "gaussian_pulse":
        st = float(p.get("sigma_t", 0.3))
        if not st > 0:
            raise ValueError("sigma_t must be positive")
        env_t = np.exp(-(t - t0) ** 2 / (2 * st ** 2))
        return Current(grid, q * np.outer(env_t, env_x), label)

    w0 = float(p.get("omega0", 0.0))
    if len(t) > 1 and abs(w0) > math.pi / grid.dt:
        raise ValueError(f"omega0={w0} is above the grid's Nyquist frequency {math.pi / grid.dt}")
    return Current(grid, q * np.outer(np.cos(w0 * t), env_x), label)


def current_from_spec(spec: dict, grid: SpacetimeGrid) -> Current:
    """Scenario-file form: {"kind": ..., "params": {...}, "label": ...}."""
    return make_current(spec["kind"], spec.get("params", {}), grid, spec.get("label", "j"))


def spectrum(c: Current) -> CurrentSpectrum:
    g = c.grid
    m, n = g.shape
    dt, dx = g.dt, g.dx
    omega = 2 * np.pi * np.fft.fftfreq(m, dt)
    k = 2 * np.pi * np.fft.fftfreq(n, dx)
    # sum_t e^{+i w t} is an inverse DFT in time, sum_x e^{-i k x} a forward DFT in space
    core = m * np.fft.ifft(np.fft.fft(c.density, axis=1), axis=0)
    phase = np.exp(1j * np.multiply.outer(omega * g.t[0], np.ones(n))
                   - 1j * np.multiply.outer(np.ones(m), k * g.x[0]))
    measure = (2 * np.pi / (m * dt)) * (2 * np.pi / (n * dx)) / (2 * np.pi) ** 2
    return CurrentSpectrum(omega, k, core * phase * dt * dx, measure)


def on_shell_amplitudes(c: Current) -> np.ndarray:
    """j~ at the on-shell points (w_n = |k_n|, k_n) of the grid's nonzero modes.

    Uses the trapezoid rule in time, the same measure as :func:`bilinear`.
    """
    g = c.grid
    wt = g.time_weights() * g.dx
    et = np.exp(-1j * np.multiply.outer(g.omega, g.t))   # (modes, M)
    ex = np.exp(1j * np.multiply.outer(g.k, g.x))        # (modes, N)
    weighted = c.density * wt[:, None]
    return np.einsum("nm,mj,nj->n", et, weighted, ex)


def _weighted(c: Current) -> np.ndarray:
    return c.density * (c.grid.time_weights() * c.grid.dx)[:, None]


def _check_pair(a: Current, kernel: KernelField, b: Current) -> None:
    if a.grid != b.grid:
        raise ValueError("currents live on different grids")
    if kernel.grid != a.grid.lag_grid():
        raise ValueError("kernel must be sampled on the currents' lag grid (grid.lag_grid())")


def bilinear(a: Current, kernel: KernelField, b: Current, method: str = "direct") -> complex:
    """sum_x sum_y j_a(x) K(x - y) j_b(y) with the grid's 4-volume measure.

    ``kernel`` is sampled on ``a.grid.lag_grid()``.  ``method="direct"`` does
    the double sum point by point; ``method="fft"`` evaluates the same sum as
    a convolution.
    """
    _check_pair(a, kernel, b)
    if method == "direct":
        return _bilinear_direct(_weighted(a), kernel.values, _weighted(b))
    if method == "fft":
        return _bilinear_fft(_weighted(a), kernel.values, _weighted(b))
    raise ValueError(f"unknown method {method!r}")


def _bilinear_direct(wa: np.ndarray, kv: np.ndarray, wb: np.ndarray) -> complex:
    m, n = wa.shape
    j = np.arange(n)
    xlag = (j[:, None] - j[None, :] + n // 2) % n      # lattice index of x_j - x_j'
    kc = kv[:, xlag]                                    # (2M-1, N, N) circulant blocks
    # z[l, j, p] = sum_j' K(lag l, x_j - x_j') j_b(t_p, x_j')
    z = (kc.reshape(-1, n) @ wb.T).reshape(2 * m - 1, n, m)
    i = np.arange(m)
    lag = i[:, None] - i[None, :] + m - 1              # (i, p) -> time-lag index
    zz = z[lag, :, i[None, :]]                          # (M, M, N)
    return complex(np.einsum("ij,ipj->", wa, zz))


def _bilinear_fft(wa: np.ndarray, kv: np.ndarray, wb: np.ndarray) -> complex:
    m, n = wa.shape
    kr = np.roll(kv, -(n // 2), axis=1)                  # column s holds spatial lag s*dx
    size = 1 << int(math.ceil(math.log2(3 * m - 2)))
    conv = np.fft.ifft2(np.fft.fft2(kr, s=(size, n)) * np.fft.fft2(wb, s=(size, n)))
    return complex(np.sum(wa * conv[m - 1:2 * m - 1, :]))
