"""Emitter/absorber transactions.

A photon is created only when an emitter and the absorbers jointly respond:
a Bernoulli gate with probability e^2 (one factor of the coupling for the
offer, one for the confirmation), then exactly one absorber j receives the
photon with Born probability |<k_j|Psi>|^2.  Absorbers own disjoint windows
of the grid's momentum modes and must cover all of them; an incomplete set
cannot carry a transaction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Sequence

import numpy as np

from . import streams
from .algebra import canonical
from .grid import SpacetimeGrid
from .propagators import eval_kernel_at

__all__ = [
    "IncompleteAbsorberSetError",
    "Absorber",
    "AbsorberSet",
    "Completeness",
    "OfferWave",
    "TransactionRecord",
    "TransactionScenario",
    "completeness_check",
    "project_offer",
    "nu_gate",
    "nu_probability",
    "select_winner",
    "mode_functions",
    "factorization_residual",
    "factorization_check",
    "sample_point_pairs",
    "iter_transactions",
    "run_trials",
    "NORM_TOL",
]

NORM_TOL = 1e-12
PHASINGS = ("feynman", "dyson")


class IncompleteAbsorberSetError(ValueError):
    """The absorber windows do not cover every grid mode exactly once."""

    def __init__(self, report: "Completeness"):
        self.report = report
        super().__init__(f"absorber set is {report.status}: missing={list(report.missing)}, "
                         f"overlapping={list(report.overlapping)}, extraneous={list(report.extraneous)}")


@dataclass(frozen=True)
class Absorber:
    id: str
    window: tuple[int, int]   # inclusive range of mode numbers n; n = 0 is skipped
    weight: float = 1.0

    def __post_init__(self):
        lo, hi = (int(v) for v in self.window)
        if lo > hi:
            raise ValueError(f"absorber {self.id!r}: window start {lo} exceeds end {hi}")
        if not self.weight >= 0:
            raise ValueError(f"absorber {self.id!r}: weight must be non-negative")
        object.__setattr__(self, "window", (lo, hi))

    def modes(self) -> list[int]:
        lo, hi = self.window
        return [n for n in range(lo, hi + 1) if n != 0]


@dataclass(frozen=True)
class AbsorberSet:
    absorbers: tuple[Absorber, ...]

    def __post_init__(self):
        object.__setattr__(self, "absorbers", tuple(self.absorbers))
        ids = [a.id for a in self.absorbers]
        if len(set(ids)) != len(ids):
            raise ValueError("absorber ids must be unique")
        if not ids:
            raise ValueError("an absorber set needs at least one absorber")

    @classmethod
    def blocks(cls, grid: SpacetimeGrid, count: int, prefix: str = "a") -> "AbsorberSet":
        """``count`` contiguous equal-width windows over all N mode numbers."""
        n = grid.num_modes
        if n % count:
            raise ValueError(f"{n} modes do not split into {count} equal blocks")
        width = n // count
        start = -n // 2 + 1
        return cls(tuple(Absorber(f"{prefix}{i}", (start + i * width, start + (i + 1) * width - 1))
                         for i in range(count)))

    @classmethod
    def from_records(cls, records: Sequence[Mapping]) -> "AbsorberSet":
        return cls(tuple(Absorber(str(r["id"]), tuple(r["window"]), float(r.get("weight", 1.0)))
                         for r in records))

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(a.id for a in self.absorbers)

    def without(self, *ids: str) -> "AbsorberSet":
        return AbsorberSet(tuple(a for a in self.absorbers if a.id not in ids))


@dataclass(frozen=True)
class Completeness:
    status: str    # "complete" | "incomplete" | "overlapping"
    missing: tuple[int, ...] = ()
    overlapping: tuple[int, ...] = ()
    extraneous: tuple[int, ...] = ()

    @property
    def complete(self) -> bool:
        return self.status == "complete"


def completeness_check(s: AbsorberSet, grid: SpacetimeGrid) -> Completeness:
    """Does ``s`` cover every nonzero grid mode exactly once?

    Overlaps take precedence over gaps in the classification; modes outside
    the grid count as a defect of an incomplete set.
    """
    wanted = set(int(n) for n in grid.mode_numbers)
    seen: dict[int, int] = {}
    for a in s.absorbers:
        for n in a.modes():
            seen[n] = seen.get(n, 0) + 1
    overlapping = tuple(sorted(n for n, c in seen.items() if c > 1))
    missing = tuple(sorted(wanted - set(seen)))
    extraneous = tuple(sorted(set(seen) - wanted))
    if overlapping:
        status = "overlapping"
    elif missing or extraneous:
        status = "incomplete"
    else:
        status = "complete"
    return Completeness(status, missing, overlapping, extraneous)


def _require_complete(s: AbsorberSet, grid: SpacetimeGrid) -> None:
    report = completeness_check(s, grid)
    if not report.complete:
        raise IncompleteAbsorberSetError(report)


@dataclass(frozen=True, eq=False)
class OfferWave:
    """Amplitudes <k_i|Psi> keyed by absorber id."""

    ids: tuple[str, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.array(self.amplitudes, dtype=complex)
        if a.shape != (len(self.ids),):
            raise ValueError("one amplitude per absorber id is required")
        if not np.all(np.isfinite(a)):
            raise ValueError("offer amplitudes must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "amplitudes", a)

    @classmethod
    def from_polar(cls, ids: Sequence[str], moduli: Sequence[float], phases: Sequence[float] | None = None) -> "OfferWave":
        moduli = np.asarray(moduli, dtype=float)
        if np.any(moduli < 0):
            raise ValueError("moduli must be non-negative")
        phases = np.zeros_like(moduli) if phases is None else np.asarray(phases, dtype=float)
        return cls(tuple(ids), moduli * np.exp(1j * phases))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    @property
    def norm_squared(self) -> float:
        return float(self.probabilities.sum())

    @property
    def is_normalized(self) -> bool:
        return abs(self.norm_squared - 1.0) <= NORM_TOL

    def normalized(self) -> "OfferWave":
        n = self.norm_squared
        if n == 0:
            raise ValueError("cannot normalize a zero offer")
        return OfferWave(self.ids, self.amplitudes / math.sqrt(n))

    def with_phase(self, phase: float) -> "OfferWave":
        return OfferWave(self.ids, self.amplitudes * np.exp(1j * phase))


def _psi_array(psi_modes, grid: SpacetimeGrid) -> np.ndarray:
    modes = grid.mode_numbers
    if isinstance(psi_modes, Mapping):
        unknown = set(int(n) for n in psi_modes) - set(int(n) for n in modes)
        if unknown:
            raise ValueError(f"psi given on modes outside the grid: {sorted(unknown)}")
        return np.array([complex(psi_modes.get(int(n), 0)) for n in modes])
    psi = np.asarray(psi_modes, dtype=complex)
    if psi.shape != modes.shape:
        raise ValueError(f"psi needs one amplitude per nonzero mode ({len(modes)})")
    return psi


def project_offer(psi_modes, s: AbsorberSet, grid: SpacetimeGrid) -> OfferWave:
    """Aggregate a per-mode state onto absorbers.

    Absorber i gets sqrt(sum of |psi_n|^2 over its window) with the phase of
    the window's largest-modulus mode (lowest n on ties), so the norm is
    preserved.
    """
    _require_complete(s, grid)
    psi = _psi_array(psi_modes, grid)
    index = {int(n): i for i, n in enumerate(grid.mode_numbers)}
    amps = []
    for a in s.absorbers:
        window = psi[[index[n] for n in a.modes()]]
        mag = np.abs(window)
        dominant = window[int(np.argmax(mag))]
        phase = dominant / abs(dominant) if dominant != 0 else 1.0
        amps.append(math.sqrt(float(np.sum(mag ** 2))) * phase)
    return OfferWave(s.ids, np.array(amps))


def nu_probability(e: float, weight: float = 1.0) -> float:
    """Probability min(1, e^2 g) that a real photon is created."""
    e = float(e)
    if not 0.0 <= e <= 1.0:
        raise ValueError(f"coupling e must lie in [0, 1], got {e}")
    if not weight >= 0 or not math.isfinite(weight):
        raise ValueError("weight g must be finite and non-negative")
    return min(1.0, e * e * weight)


def nu_gate(e: float, rng: np.random.Generator, weight: float = 1.0) -> bool:
    """Bernoulli(e^2 g) draw deciding whether the non-unitary event occurs."""
    return bool(rng.random() < nu_probability(e, weight))


def _require_normalized(w: OfferWave) -> None:
    if not w.is_normalized:
        raise ValueError(f"offer is not normalized (sum |a|^2 = {w.norm_squared!r})")


def _cdf(w: OfferWave) -> np.ndarray:
    return np.cumsum(w.probabilities)


def _pick(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u * cdf[-1], side="right")
    return np.minimum(idx, len(cdf) - 1)


def select_winner(w: OfferWave, rng: np.random.Generator) -> tuple[str, float]:
    """Draw the single receiving absorber; returns (id, |<k_j|Psi>|^2)."""
    _require_normalized(w)
    j = int(_pick(_cdf(w), np.array([rng.random()]))[0])
    return w.ids[j], float(w.probabilities[j])


@dataclass(frozen=True)
class TransactionRecord:
    nu_occurred: bool
    winner: str | None
    probability_used: float
    seed: int
    coupling: float

    def __post_init__(self):
        if self.nu_occurred != (self.winner is not None):
            raise ValueError("a winner exists exactly when the non-unitary event occurred")


def mode_functions(grid: SpacetimeGrid, modes: Sequence[int], t, x) -> np.ndarray:
    """Box-normalised positive-frequency modes exp(-i(w t - k x)) / sqrt(2 w L).

    Returns shape (len(modes),) + broadcast(t, x).shape.
    """
    n = np.asarray(modes, dtype=float)
    if np.any(n == 0):
        raise ValueError("the zero mode has no mode function")
    k = 2 * np.pi * n / grid.spatial_extent
    w = np.abs(k)
    t, x = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(x, dtype=float))
    shape = (len(n),) + (1,) * t.ndim
    phase = w.reshape(shape) * t - k.reshape(shape) * x
    return np.exp(-1j * phase) / np.sqrt(2 * w * grid.spatial_extent).reshape(shape)


def _split_points(points) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    p = np.asarray(points, dtype=float).reshape(-1, 4)
    return p[:, 0], p[:, 1], p[:, 2], p[:, 3]


def factorization_residual(grid: SpacetimeGrid, modes: Sequence[int], points,
                           phasing: str = "feynman") -> float:
    """Relative max residual between the kernel and its mode-product sum.

    Feynman phasing compares -D+(x - y) with i sum_k f_k(x) conj(f_k(y));
    Dyson phasing compares D-(x - y) with i sum_k conj(f_k(x)) f_k(y).
    ``points`` holds rows (t_x, x_x, t_y, x_y).
    """
    if phasing not in PHASINGS:
        raise ValueError(f"phasing must be one of {PHASINGS}")
    t1, x1, t2, x2 = _split_points(points)
    fx = mode_functions(grid, modes, t1, x1)
    fy = mode_functions(grid, modes, t2, x2)
    if phasing == "feynman":
        lhs = -eval_kernel_at(canonical("d_plus"), grid, t1 - t2, x1 - x2)
        rhs = 1j * np.sum(fx * fy.conj(), axis=0)
    else:
        lhs = eval_kernel_at(canonical("d_minus"), grid, t1 - t2, x1 - x2)
        rhs = 1j * np.sum(fx.conj() * fy, axis=0)
    scale = float(np.abs(lhs).max())
    return float(np.abs(lhs - rhs).max()) / scale


def factorization_check(grid: SpacetimeGrid, s: AbsorberSet, points, phasing: str = "feynman") -> float:
    """Mode factorisation of the radiated kernel, summed window by window."""
    _require_complete(s, grid)
    modes = [n for a in s.absorbers for n in a.modes()]
    return factorization_residual(grid, modes, points, phasing)


def sample_point_pairs(grid: SpacetimeGrid, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` rows (t_x, x_x, t_y, x_y) uniform in the grid window."""
    t0, t1 = grid.time_samples[0], grid.time_samples[-1]
    half = grid.spatial_extent / 2
    t = rng.uniform(t0, t1, size=(count, 2))
    x = rng.uniform(-half, half, size=(count, 2))
    return np.column_stack([t[:, 0], x[:, 0], t[:, 1], x[:, 1]])


@dataclass(frozen=True)
class TransactionScenario:
    grid: SpacetimeGrid
    absorbers: AbsorberSet
    offer: OfferWave
    coupling: float
    weight: float = 1.0
    phasing: str = "feynman"
    factorization_points: int = 100

    def validate(self) -> None:
        _require_complete(self.absorbers, self.grid)
        if self.offer.ids != self.absorbers.ids:
            raise ValueError("offer amplitudes must be listed in absorber order")
        _require_normalized(self.offer)
        nu_probability(self.coupling, self.weight)
        if self.phasing not in PHASINGS:
            raise ValueError(f"phasing must be one of {PHASINGS}")


FACTORIZATION_STREAM = (1 << 31, 0)


def _block_draws(p: float, cdf: np.ndarray, rng: np.random.Generator, n: int):
    gate = rng.random(n) < p
    winners = _pick(cdf, rng.random(int(gate.sum())))
    return gate, winners


def iter_transactions(scenario: TransactionScenario, trials: int, seed: int) -> Iterator[TransactionRecord]:
    """Per-trial records, drawn from the same streams as :func:`run_trials`."""
    scenario.validate()
    p = nu_probability(scenario.coupling, scenario.weight)
    cdf = _cdf(scenario.offer)
    probs = scenario.offer.probabilities
    for b, n in streams.blocks(trials):
        gate, winners = _block_draws(p, cdf, streams.block_generator(seed, b), n)
        it = iter(winners)
        for g in gate:
            if g:
                j = int(next(it))
                yield TransactionRecord(True, scenario.offer.ids[j], float(probs[j]), seed, scenario.coupling)
            else:
                yield TransactionRecord(False, None, 0.0, seed, scenario.coupling)


def _wilson(k: int, n: int, z: float = 1.959963984540054) -> list[float]:
    if n == 0:
        return [0.0, 1.0]
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return [max(0.0, centre - half), min(1.0, centre + half)]


def run_trials(scenario: TransactionScenario, trials: int, seed: int, workers: int = 1) -> dict:
    """Monte Carlo ensemble of gated transactions.

    Each trial draws the gate; gated trials draw exactly one winner.  The
    report depends only on (scenario, trials, seed).
    """
    scenario.validate()
    if trials < 1:
        raise ValueError("trials must be >= 1")
    p = nu_probability(scenario.coupling, scenario.weight)
    cdf = _cdf(scenario.offer)
    size = len(scenario.offer.ids)

    def work(rng, n):
        gate, winners = _block_draws(p, cdf, rng, n)
        return int(gate.sum()), np.bincount(winners, minlength=size)

    parts = streams.run_blocks(seed, trials, work, workers=workers)
    nu_count = sum(k for k, _ in parts)
    counts = np.sum([c for _, c in parts], axis=0)
    if int(counts.sum()) != nu_count:
        raise AssertionError("every non-unitary trial must have exactly one winner")

    points = sample_point_pairs(scenario.grid, scenario.factorization_points,
                                np.random.default_rng(np.random.SeedSequence(seed, spawn_key=FACTORIZATION_STREAM)))
    residual = factorization_check(scenario.grid, scenario.absorbers, points, scenario.phasing)
    ids = scenario.offer.ids
    return {
        "trials": int(trials),
        "seed": int(seed),
        "coupling": float(scenario.coupling),
        "weight": float(scenario.weight),
        "phasing": scenario.phasing,
        "nu_probability": p,
        "nu_count": int(nu_count),
        "nu_rate": nu_count / trials,
        "nu_rate_ci95": _wilson(nu_count, trials),
        "winner_histogram": {i: int(c) for i, c in zip(ids, counts) if c},
        "winner_frequencies": {i: (int(c) / nu_count if nu_count else 0.0) for i, c in zip(ids, counts)},
        "born_probabilities": {i: float(q) for i, q in zip(ids, scenario.offer.probabilities)},
        "factorization_residual": residual,
        "factorization_points": int(scenario.factorization_points),
    }
