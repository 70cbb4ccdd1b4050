"""First-order current-current action and photon emission statistics.

The first-order action between sources a and b is

    1/2 sum_x sum_y j_a(x) D_F(x - y) j_b(y),

split through D_F = Dbar - (i/2) D1 into a real Coulomb (virtual photon)
part and a radiative (real photon) part.  A single source emits on average
n = 1/2 <j D1 j> photons; the vacuum persists with probability exp(-n) and
the photon count is Poisson.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np
from scipy.special import gammainc, gammaln

from . import streams
from .algebra import canonical
from .currents import Current, bilinear
from .grid import SpacetimeGrid
from .propagators import KernelField, eval_kernel

__all__ = [
    "NumericalInvariantError",
    "ActionSplit",
    "EmissionStats",
    "lag_kernel",
    "action_split",
    "action_sum",
    "radiative_posfreq",
    "radiative_difference_form",
    "symmetrized_radiative",
    "mean_photon_number",
    "persistence_probability",
    "emission_probability",
    "poisson_pmf",
    "sample_photon_counts",
    "emission_stats",
]

NEGATIVE_NOISE = 1e-12


class NumericalInvariantError(ArithmeticError):
    """A computed quantity broke an invariant by more than rounding noise."""


@lru_cache(maxsize=32)
def lag_kernel(name: str, grid: SpacetimeGrid) -> KernelField:
    """Named kernel sampled on ``grid.lag_grid()``, ready for :func:`bilinear`."""
    return eval_kernel(canonical(name), grid.lag_grid())


def _pair_grid(a: Current, b: Current, grid: SpacetimeGrid | None) -> SpacetimeGrid:
    if a.grid != b.grid or (grid is not None and grid != a.grid):
        raise ValueError("currents and grid must coincide")
    return a.grid


@dataclass(frozen=True)
class ActionSplit:
    coulomb_part: float
    radiative_part: float
    total: complex

    @classmethod
    def from_parts(cls, coulomb: float, radiative: float) -> "ActionSplit":
        return cls(coulomb, radiative, complex(coulomb, -0.5 * radiative))

    def __add__(self, other: "ActionSplit") -> "ActionSplit":
        return ActionSplit.from_parts(self.coulomb_part + other.coulomb_part,
                                      self.radiative_part + other.radiative_part)

    def to_dict(self) -> dict:
        return {"coulomb_part": self.coulomb_part, "radiative_part": self.radiative_part,
                "total": {"re": self.total.real, "im": self.total.imag}}


def action_split(a: Current, b: Current, grid: SpacetimeGrid | None = None,
                 method: str = "direct") -> ActionSplit:
    """Coulomb and radiative parts of 1/2 <a D_F b>.

    coulomb_part = 1/2 <a Dbar b>, radiative_part = 1/2 <a D1 b>, and
    total = coulomb_part - (i/2) radiative_part.
    """
    g = _pair_grid(a, b, grid)
    coulomb = 0.5 * bilinear(a, lag_kernel("bar", g), b, method)
    radiative = 0.5 * bilinear(a, lag_kernel("one", g), b, method)
    return ActionSplit.from_parts(coulomb.real, radiative.real)


def action_sum(currents: Sequence[Current], method: str = "direct") -> ActionSplit:
    """1/2 sum_{i,j} <j_i D_F j_j> over all ordered pairs, self terms included."""
    total = ActionSplit.from_parts(0.0, 0.0)
    for a, b in product(currents, repeat=2):
        total = total + action_split(a, b, method=method)
    return total


def radiative_posfreq(a: Current, b: Current, grid: SpacetimeGrid | None = None,
                      method: str = "direct") -> complex:
    """1/2 <a D+ b>: one ordered term of the positive-frequency form."""
    g = _pair_grid(a, b, grid)
    return 0.5 * bilinear(a, lag_kernel("d_plus", g), b, method)


def radiative_difference_form(a: Current, b: Current, grid: SpacetimeGrid | None = None,
                              method: str = "direct") -> complex:
    """1/4 <a (D+ - D-) b>: one ordered term of the radiative part of 1/2 <a D_F b>."""
    g = _pair_grid(a, b, grid)
    kp = lag_kernel("d_plus", g)
    km = lag_kernel("d_minus", g)
    return 0.25 * bilinear(a, kp - km, b, method)


def symmetrized_radiative(currents: Sequence[Current], include_self: bool = True,
                          method: str = "direct") -> tuple[complex, complex]:
    """Radiative term summed over ordered pairs by both routes.

    Returns (sum of 1/4 <j_i (D+ - D-) j_j>, sum of 1/2 <j_i D+ j_j>).  The
    two agree whenever the index set is closed under swapping i and j.
    """
    r_diff = 0j
    r_pos = 0j
    n = len(currents)
    for i, j in product(range(n), repeat=2):
        if i == j and not include_self:
            continue
        r_diff += radiative_difference_form(currents[i], currents[j], method=method)
        r_pos += radiative_posfreq(currents[i], currents[j], method=method)
    return r_diff, r_pos


def mean_photon_number(j: Current, grid: SpacetimeGrid | None = None, method: str = "direct") -> float:
    """n = 1/2 <j D1 j>.

    Negative values within 1e-12 of zero are rounding and clamp to 0; anything
    more negative raises :class:`NumericalInvariantError`.
    """
    g = _pair_grid(j, j, grid)
    value = 0.5 * bilinear(j, lag_kernel("one", g), j, method)
    nbar = value.real
    scale = max(abs(value), 1.0)
    if abs(value.imag) > 1e-10 * scale:
        raise NumericalInvariantError(f"<j D1 j> has imaginary part {value.imag:.3e}")
    if nbar < 0:
        if nbar < -NEGATIVE_NOISE:
            raise NumericalInvariantError(f"mean photon number is negative: {nbar:.3e}")
        nbar = 0.0
    return nbar


def _check_nbar(nbar: float) -> float:
    nbar = float(nbar)
    if not nbar >= 0 or not math.isfinite(nbar):
        raise ValueError(f"mean photon number must be finite and >= 0, got {nbar}")
    return nbar


def persistence_probability(nbar: float) -> float:
    """Vacuum persistence |S(D1)|^2 = exp(-n)."""
    return math.exp(-_check_nbar(nbar))


def emission_probability(nbar: float) -> float:
    """1 - exp(-n), evaluated without cancellation."""
    return -math.expm1(-_check_nbar(nbar))


def poisson_pmf(nbar: float, max_count: int) -> tuple[np.ndarray, float]:
    """Poisson probabilities for m = 0..max_count and the tail P(m > max_count)."""
    nbar = _check_nbar(nbar)
    if max_count < 0:
        raise ValueError("max_count must be >= 0")
    m = np.arange(max_count + 1)
    if nbar == 0:
        pmf = (m == 0).astype(float)
        return pmf, 0.0
    pmf = np.exp(-nbar + m * math.log(nbar) - gammaln(m + 1))
    tail = float(gammainc(max_count + 1, nbar))
    return pmf, tail


def _inversion_table(nbar: float) -> np.ndarray:
    # cumulative distribution until the remaining mass is below double rounding
    top = int(nbar + 12 * math.sqrt(nbar) + 40)
    pmf, _ = poisson_pmf(nbar, top)
    return np.cumsum(pmf)


def _draw_counts(nbar: float, rng: np.random.Generator, n: int) -> np.ndarray:
    if nbar == 0:
        return np.zeros(n, dtype=np.int64)
    if nbar >= 30:
        return rng.poisson(nbar, n)
    cdf = _inversion_table(nbar)
    u = rng.random(n)
    counts = np.searchsorted(cdf, u, side="right")
    # cdf[-1] may round just below 1; those draws take the last tabulated count
    return np.minimum(counts, len(cdf) - 1)


def sample_photon_counts(nbar: float, trials: int, seed: int, workers: int = 1) -> np.ndarray:
    """Histogram of Poisson(nbar) photon counts; entry m counts trials with m photons.

    Counts are drawn by inversion of the cumulative distribution (sequential
    search) for nbar < 30.  The histogram depends only on (nbar, trials, seed).
    """
    nbar = _check_nbar(nbar)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    parts = streams.run_blocks(seed, trials, lambda rng, n: np.bincount(_draw_counts(nbar, rng, n)),
                               workers=workers)
    size = max(len(p) for p in parts)
    hist = np.zeros(size, dtype=np.int64)
    for p in parts:
        hist[:len(p)] += p
    return hist


@dataclass(frozen=True)
class EmissionStats:
    mean_photons: float
    persistence: float
    emission_probability: float
    pmf: tuple[float, ...]
    pmf_tail: float
    histogram: tuple[int, ...]
    trials: int
    seed: int
    grid: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pmf"] = list(self.pmf)
        d["histogram"] = list(self.histogram)
        return d


def emission_stats(nbar: float, max_count: int, trials: int, seed: int,
                   grid: SpacetimeGrid | None = None, workers: int = 1) -> EmissionStats:
    nbar = _check_nbar(nbar)
    pmf, tail = poisson_pmf(nbar, max_count)
    hist = sample_photon_counts(nbar, trials, seed, workers)
    return EmissionStats(
        mean_photons=nbar,
        persistence=persistence_probability(nbar),
        emission_probability=emission_probability(nbar),
        pmf=tuple(float(p) for p in pmf),
        pmf_tail=tail,
        histogram=tuple(int(h) for h in hist),
        trials=int(trials),
        seed=int(seed),
        grid=grid.descriptor() if grid is not None else {},
    )
