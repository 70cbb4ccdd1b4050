"""1+1D spacetime lattice with periodic space and its momentum modes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = ["SpacetimeGrid"]


@dataclass(frozen=True)
class SpacetimeGrid:
    """Points (t_i, x_j) with x_j = (j - N/2) L/N on a periodic box of length L.

    The momentum modes are k_n = 2 pi n / L for n in (-N/2, N/2], with the
    zero mode excluded from every mode sum (it is singular for a massless
    field).  Natural units, hbar = c = 1.
    """

    spatial_extent: float
    num_modes: int
    time_samples: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "spatial_extent", float(self.spatial_extent))
        object.__setattr__(self, "time_samples", tuple(float(t) for t in self.time_samples))
        if not self.spatial_extent > 0 or not math.isfinite(self.spatial_extent):
            raise ValueError("spatial extent L must be positive and finite")
        if self.num_modes < 4 or self.num_modes % 2:
            raise ValueError("num_modes must be an even integer >= 4")
        if not self.time_samples:
            raise ValueError("at least one time sample is required")
        t = np.asarray(self.time_samples)
        if not np.all(np.isfinite(t)) or np.any(np.diff(t) <= 0):
            raise ValueError("time samples must be finite and strictly increasing")

    @classmethod
    def uniform(cls, spatial_extent: float, num_modes: int, t_min: float, t_max: float,
                num_times: int) -> "SpacetimeGrid":
        t = np.linspace(t_min, t_max, num_times)
        if t_min == -t_max:
            t = 0.5 * (t - t[::-1])  # exact mirror symmetry about t = 0
        return cls(spatial_extent, num_modes, tuple(t))

    @classmethod
    def default(cls) -> "SpacetimeGrid":
        """L = 2 pi, N = 64, 129 time samples on [-pi, pi]."""
        return cls.uniform(2 * math.pi, 64, -math.pi, math.pi, 129)

    @classmethod
    def from_descriptor(cls, d: dict) -> "SpacetimeGrid":
        if "time_samples" in d:
            return cls(d["L"], d["N"], tuple(d["time_samples"]))
        return cls.uniform(d["L"], d["N"], d["t_min"], d["t_max"], d["num_times"])

    def descriptor(self) -> dict:
        if self.is_uniform:
            return {"L": self.spatial_extent, "N": self.num_modes,
                    "t_min": self.time_samples[0], "t_max": self.time_samples[-1],
                    "num_times": len(self.time_samples)}
        return {"L": self.spatial_extent, "N": self.num_modes,
                "time_samples": list(self.time_samples)}

    @cached_property
    def t(self) -> np.ndarray:
        return np.array(self.time_samples)

    @cached_property
    def x(self) -> np.ndarray:
        n = self.num_modes
        return (np.arange(n) - n // 2) * self.dx

    @property
    def dx(self) -> float:
        return self.spatial_extent / self.num_modes

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.time_samples), self.num_modes

    @cached_property
    def is_uniform(self) -> bool:
        if len(self.time_samples) < 3:
            return True
        d = np.diff(self.t)
        return bool(np.allclose(d, d[0], rtol=1e-12, atol=0))

    @property
    def dt(self) -> float:
        if len(self.time_samples) < 2:
            raise ValueError("a single time sample has no spacing")
        if not self.is_uniform:
            raise ValueError("time samples are not uniformly spaced")
        return (self.time_samples[-1] - self.time_samples[0]) / (len(self.time_samples) - 1)

    @cached_property
    def is_time_symmetric(self) -> bool:
        return bool(np.allclose(self.t, -self.t[::-1], rtol=0, atol=1e-12 * max(1.0, np.abs(self.t).max())))

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Nonzero mode numbers n, ascending."""
        n = np.arange(-self.num_modes // 2 + 1, self.num_modes // 2 + 1)
        return n[n != 0]

    @cached_property
    def k(self) -> np.ndarray:
        return 2 * np.pi * self.mode_numbers / self.spatial_extent

    @cached_property
    def omega(self) -> np.ndarray:
        return np.abs(self.k)

    def time_weights(self) -> np.ndarray:
        """Trapezoid quadrature weights in time."""
        t = self.t
        if len(t) == 1:
            return np.ones(1)
        w = np.zeros_like(t)
        d = np.diff(t)
        w[:-1] += d / 2
        w[1:] += d / 2
        return w

    def lag_grid(self) -> "SpacetimeGrid":
        """Grid of differences x - y between points of this grid.

        Time lags are l*dt for |l| <= M-1; spatial lags live on the same
        periodic lattice.
        """
        m = len(self.time_samples)
        dt = self.dt
        lags = tuple(float(l * dt) for l in range(-(m - 1), m))
        return SpacetimeGrid(self.spatial_extent, self.num_modes, lags)

    def reflect_index_t(self) -> np.ndarray:
        if not self.is_time_symmetric:
            raise ValueError("time samples are not symmetric about t = 0")
        return np.arange(len(self.time_samples))[::-1]

    def reflect_index_x(self) -> np.ndarray:
        n = self.num_modes
        return (n - np.arange(n)) % n
