"""Numerical kernels of a massless scalar field on a periodic 1+1D box.

All kernels are built from the cut propagators

    Delta+(t, x) = sum_n exp(-i(w_n t - k_n x)) / (2 w_n L),
    Delta-(t, x) = conj(Delta+(t, x)),

with D+ = -i Delta+, D- = i Delta- and the causal parts split by a step
function with theta(0) = 1/2.  Kernels are evaluated with their second
argument at the origin, K(t, x) = K(x - 0).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .algebra import BasisKernel, CausalPart, FrequencyPart, KernelExpr
from .grid import SpacetimeGrid

__all__ = [
    "KernelField",
    "cut_propagator_at",
    "eval_cut_propagator",
    "eval_kernel",
    "eval_kernel_at",
    "eval_feynman_momentum",
    "residual",
    "reflect_field",
]


@dataclass(frozen=True, eq=False)
class KernelField:
    """Complex samples K(t_i, x_j) on a grid; ``values`` has shape (M, N)."""

    grid: SpacetimeGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        if v.shape != self.grid.shape:
            raise ValueError(f"values shape {v.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("kernel field has non-finite values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def _same_grid(self, other: "KernelField"):
        if other.grid != self.grid:
            raise ValueError("kernel fields live on different grids")

    def __add__(self, other):
        if not isinstance(other, KernelField):
            return NotImplemented
        self._same_grid(other)
        return KernelField(self.grid, self.values + other.values)

    def __sub__(self, other):
        if not isinstance(other, KernelField):
            return NotImplemented
        self._same_grid(other)
        return KernelField(self.grid, self.values - other.values)

    def __neg__(self):
        return KernelField(self.grid, -self.values)

    def __mul__(self, scalar):
        if isinstance(scalar, KernelField):
            return NotImplemented
        return KernelField(self.grid, complex(scalar) * self.values)

    __rmul__ = __mul__

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def to_csv(self, path) -> None:
        """Write columns t, x, re, im; one row per grid point."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", "x", "re", "im"])
            for i, t in enumerate(self.grid.t):
                for j, x in enumerate(self.grid.x):
                    v = self.values[i, j]
                    w.writerow([repr(float(t)), repr(float(x)), repr(float(v.real)), repr(float(v.imag))])


def _validate_sign(sign: str) -> int:
    if sign in ("+", 1, "plus"):
        return 1
    if sign in ("-", -1, "minus"):
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


def cut_propagator_at(sign, grid: SpacetimeGrid, t, x) -> np.ndarray:
    """Delta+ or Delta- at arbitrary points (t, x); broadcasts t against x."""
    s = _validate_sign(sign)
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    c = 1.0 / (2.0 * grid.omega * grid.spatial_extent)
    phase = np.multiply.outer(t, grid.omega) - np.multiply.outer(x, grid.k)
    return (np.exp(-1j * s * phase) * c).sum(axis=-1)


def eval_cut_propagator(sign, grid: SpacetimeGrid) -> KernelField:
    """Sampled Delta+ (sign '+') or Delta- (sign '-') on the grid."""
    s = _validate_sign(sign)
    c = 1.0 / (2.0 * grid.omega * grid.spatial_extent)
    et = np.exp(-1j * np.multiply.outer(grid.t, grid.omega))
    ex = np.exp(1j * np.multiply.outer(grid.k, grid.x))
    plus = (et * c) @ ex
    return KernelField(grid, plus if s > 0 else plus.conj())


def _step(t: np.ndarray) -> np.ndarray:
    return np.where(t > 0, 1.0, np.where(t < 0, 0.0, 0.5))


def _assemble(expr: KernelExpr, t: np.ndarray, delta_plus: np.ndarray, delta_minus: np.ndarray) -> np.ndarray:
    d = {FrequencyPart.POSITIVE: -1j * delta_plus, FrequencyPart.NEGATIVE: 1j * delta_minus}
    theta = {CausalPart.RETARDED: _step(t), CausalPart.ADVANCED: -_step(-t)}
    out = np.zeros(np.broadcast(t, delta_plus).shape, dtype=complex)
    for b, coeff in expr.items():
        if coeff:
            out = out + complex(coeff) * theta[b.causal_part] * d[b.frequency_part]
    return out


def eval_kernel(expr: KernelExpr, grid: SpacetimeGrid) -> KernelField:
    """Evaluate a kernel expression pointwise on the grid.

    Basis kernels are D_ret^pm = theta(t) D^pm and D_adv^pm = -theta(-t) D^pm.
    """
    if not isinstance(expr, KernelExpr):
        raise TypeError("expr must be a KernelExpr")
    dp = eval_cut_propagator("+", grid).values
    dm = dp.conj()
    t = grid.t[:, None]
    return KernelField(grid, _assemble(expr, t, dp, dm))


def eval_kernel_at(expr: KernelExpr, grid: SpacetimeGrid, t, x) -> np.ndarray:
    """Evaluate a kernel expression at arbitrary points using grid's modes."""
    dp = cut_propagator_at("+", grid, t, x)
    t = np.broadcast_to(np.asarray(t, dtype=float), dp.shape)
    return _assemble(expr, t, dp, dp.conj())


def reflect_field(f: KernelField) -> KernelField:
    """Sampled K(-t, -x); needs a grid symmetric in time."""
    g = f.grid
    return KernelField(g, f.values[np.ix_(g.reflect_index_t(), g.reflect_index_x())])


def residual(a: KernelField, b: KernelField) -> float:
    """max|a - b| / max|a|; 0 when both vanish identically."""
    if a.grid != b.grid:
        raise ValueError("residual needs fields on the same grid")
    diff = float(np.abs(a.values - b.values).max())
    scale = a.max_abs()
    if scale == 0.0:
        return 0.0 if diff == 0.0 else math.inf
    return diff / scale


def _simpson_nodes(lo: float, hi: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    n = max(2, int(math.ceil((hi - lo) / step)))
    n += n % 2
    x = np.linspace(lo, hi, n + 1)
    h = (hi - lo) / n
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return x, w * h / 3.0


def _frequency_integral(omega_k: float, epsilon: float, tau: np.ndarray, step: float,
                        cutoff: float) -> np.ndarray:
    """(1/2pi) int dw exp(-i w tau) / (w^2 - omega_k^2 + i eps) for tau >= 0.

    The integrand is even in w, so the integral is folded onto [0, inf).
    The smooth part 1/(w^2 + omega_k^2) is integrated in closed form; the
    remainder decays as w^-4 and is integrated by composite Simpson rules on
    a frequency grid that is uniform away from the pole and sinh-graded
    across its width eps/(2 omega_k).
    """
    wk2 = omega_k * omega_k
    half_width = epsilon / (2.0 * omega_k)
    r = min(0.5 * omega_k, 1.0)

    lo_x, lo_w = _simpson_nodes(0.0, omega_k - r, step)
    umax = math.asinh(r / half_width)
    u, uw = _simpson_nodes(-umax, umax, step)
    mid_x = omega_k + half_width * np.sinh(u)
    mid_w = uw * half_width * np.cosh(u)
    hi_x, hi_w = _simpson_nodes(omega_k + r, max(cutoff, omega_k + 2 * r), step)

    nodes = np.concatenate([lo_x, mid_x, hi_x])
    weights = np.concatenate([lo_w, mid_w, hi_w])
    w2 = nodes * nodes
    rem = (2.0 * wk2 - 1j * epsilon) / ((w2 - wk2 + 1j * epsilon) * (w2 + wk2))
    fw = rem * weights

    out = np.empty(len(tau), dtype=complex)
    chunk = max(1, 4_000_000 // max(1, len(nodes)))
    for s in range(0, len(tau), chunk):
        tt = tau[s:s + chunk]
        out[s:s + chunk] = np.cos(np.multiply.outer(tt, nodes)) @ fw
    return out / math.pi + np.exp(-omega_k * tau) / (2.0 * omega_k)


def eval_feynman_momentum(grid: SpacetimeGrid, epsilon: float, freq_step: float | None = None,
                          cutoff_factor: float = 40.0) -> KernelField:
    """Feynman propagator from the regularised momentum-space integral.

    D_F(t, x) = (1/L) sum_n exp(i k_n x) int dw/2pi exp(-i w t) / (w^2 - k_n^2 + i eps)

    ``freq_step`` is the frequency-grid spacing; by default it is refined
    together with epsilon as 0.2*sqrt(epsilon).  The frequency integral is
    truncated at cutoff_factor*(omega_k + 1).
    """
    if not epsilon > 0 or not math.isfinite(epsilon):
        raise ValueError("epsilon must be a positive finite number")
    if freq_step is None:
        freq_step = 0.2 * math.sqrt(epsilon)
    if not freq_step > 0:
        raise ValueError("freq_step must be positive")
    tau, inverse = np.unique(np.abs(grid.t), return_inverse=True)
    per_omega = {}
    for w in np.unique(grid.omega):
        per_omega[w] = _frequency_integral(float(w), epsilon, tau, freq_step,
                                           cutoff_factor * (float(w) + 1.0))
    # (M, modes) table of time factors
    table = np.stack([per_omega[w][inverse] for w in grid.omega], axis=1)
    ex = np.exp(1j * np.multiply.outer(grid.k, grid.x))
    return KernelField(grid, table @ ex / grid.spatial_extent)
