"""Monte Carlo simulation of the heterogeneous Poisson network around a typical receiver.

Every replication draws an independent marked Poisson field on a disk of radius
``window_radius`` centred at the receiver. Replications are grouped in blocks of
:data:`BLOCK_SIZE`; block ``b`` draws from a Philox stream keyed by
``(seed, b)``, so results do not depend on how blocks are scheduled.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy import integrate, stats

from .errors import QualityWarning
from .model import NetworkConfig, TypeClassConfig, mapped_intensity

__all__ = [
    "BLOCK_SIZE",
    "SimScenario",
    "Estimate",
    "Realization",
    "SirDraws",
    "auto_window_radius",
    "nearest_window_radius",
    "far_field_mean",
    "block_rng",
    "sample_network",
    "sir_sample",
    "simulate",
    "estimate",
    "biased_nearest_distance_test",
]

BLOCK_SIZE = 2048
_SENTINEL_WARN_FRACTION = 1e-4


def auto_window_radius(net: NetworkConfig, k: int = 0, tail_tolerance: float = 1e-3) -> float:
    """Radius at which the mean interference beyond the disk is ``tail_tolerance``
    times the mean interference from the annulus between the link distance and the disk.

    The mean interference from radii in ``[a, b]`` is proportional to
    ``a**(2-alpha) - b**(2-alpha)``; the common factor ``2 pi sum lambda E[PH]/(alpha-2)``
    cancels, leaving ``R = R_k ((1 + delta)/delta)**(1/(alpha-2))``.
    """
    if tail_tolerance <= 0:
        raise ValueError("tail_tolerance must be positive")
    inner = net.types[k].link_distance
    return inner * ((1.0 + tail_tolerance) / tail_tolerance) ** (1.0 / (net.alpha - 2.0))


def far_field_mean(net: NetworkConfig, radius: float) -> float:
    """Mean interference from transmitters beyond ``radius``:
    ``2 pi sum_k lambda_k E[P_k] radius**(2-alpha) / (alpha-2)``."""
    mass = math.fsum(t.intensity * t.power_moment(1.0, net.alpha) for t in net.types)
    return 2.0 * math.pi * mass * radius ** (2.0 - net.alpha) / (net.alpha - 2.0)


def nearest_window_radius(net: NetworkConfig, miss_probability: float = 1e-6) -> float:
    """Radius beyond which a point beats the ``1 - miss_probability`` quantile of the
    biased nearest distance with expected count at most ``miss_probability``."""
    lam_mapped = mapped_intensity(net)
    y_q = math.sqrt(-math.log(miss_probability) / (math.pi * lam_mapped))
    x = 2.0 / net.alpha

    def outside_count(radius):
        total = 0.0
        for t in net.types:
            # P[P H > (r / y_q)^alpha] integrated over r > radius
            def integrand(r):
                level = (r / y_q) ** net.alpha
                return 2.0 * math.pi * r * _mark_ccdf(t, level, net.alpha)

            total += t.intensity * integrate.quad(integrand, radius, np.inf, limit=200)[0]
        return total

    radius = y_q * max(t.power.mean for t in net.types) ** (x / 2.0)
    while outside_count(radius) > miss_probability:
        radius *= 1.25
    return radius


def _mark_ccdf(t: TypeClassConfig, level: float, alpha: float) -> float:
    """``P[P H > level]`` for constant or power-controlled transmit power."""
    if t.pc_exponent == 0.0 and t.power.is_constant:
        return float(t.fading.ccdf(level / t.power.mean))
    rng = np.random.default_rng(12345)
    p = _transmit_power(t, alpha, rng, 20000)
    return float(np.mean(t.fading.ccdf(level / p)))


@dataclass(frozen=True)
class SimScenario:
    """Monte Carlo configuration.

    ``window_radius=None`` selects :func:`auto_window_radius` for ``typical_type``.
    ``cancel_count=None`` uses the network's cancellation depth. Power control
    and receive antennas are read from the network's type classes.

    With ``far_field=True`` every replication that has interference left adds
    the mean out-of-window interference (:func:`far_field_mean`). Truncation
    alone removes about ``tail_tolerance`` times the mean annulus interference,
    which is a percent-level share of the typical (median) interference.
    """

    net: NetworkConfig
    replications: int = 10_000
    seed: int = 0
    window_radius: float | None = None
    typical_type: int = 0
    cancel_count: int | None = None
    tail_tolerance: float = 1e-3
    far_field: bool = True

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.window_radius is not None and self.window_radius <= 0:
            raise ValueError("window_radius must be positive")
        if not 0 <= self.typical_type < self.net.K:
            raise ValueError("typical_type out of range")

    @property
    def radius(self) -> float:
        if self.window_radius is not None:
            return self.window_radius
        return auto_window_radius(self.net, self.typical_type, self.tail_tolerance)

    @property
    def far_field_offset(self) -> float:
        return far_field_mean(self.net, self.radius) if self.far_field else 0.0

    @property
    def cancellations(self) -> int:
        return self.net.cancel_count if self.cancel_count is None else self.cancel_count


@dataclass(frozen=True)
class Estimate:
    """Sample mean with its standard error ``sample_std / sqrt(n)``."""

    mean: float
    stderr: float
    n: int
    seed: int

    def z_score(self, reference: float) -> float:
        if self.stderr == 0.0:
            return 0.0 if self.mean == reference else math.inf
        return abs(self.mean - reference) / self.stderr

    def agrees(self, reference: float, sigmas: float = 4.0) -> bool:
        return self.z_score(reference) <= sigmas


def _estimate(values: np.ndarray, seed: int) -> Estimate:
    n = values.size
    if n == 0:
        return Estimate(math.nan, math.nan, 0, seed)
    std = float(np.std(values, ddof=1)) if n > 1 else 0.0
    return Estimate(float(np.mean(values)), std / math.sqrt(n), n, seed)


def block_rng(seed: int, block: int) -> np.random.Generator:
    """Counter-based stream for one block of replications."""
    return np.random.Generator(np.random.Philox(key=(block << 64) | seed))


def _transmit_power(t: TypeClassConfig, alpha: float, rng: np.random.Generator, size: int):
    """Transmit powers, including the channel-aware power-control law."""
    if t.pc_exponent == 0.0:
        return np.asarray(t.power.sample(rng, size), dtype=float)
    own_gain = t.fading.sample(rng, size) * t.link_distance ** (-alpha)
    gamma = t.pc_exponent
    norm = t.fading.moment(gamma) * t.link_distance ** (-alpha * gamma)
    return t.power.mean * own_gain**gamma / norm


def _signal_power(t: TypeClassConfig, alpha: float, rng: np.random.Generator, size: int):
    path = t.link_distance ** (-alpha)
    if t.pc_exponent == 0.0:
        return t.power.sample(rng, size) * t.signal_gain.sample(rng, size) * path
    gain = t.fading.sample(rng, size)
    gamma = t.pc_exponent
    norm = t.fading.moment(gamma) * path**gamma
    return t.power.mean * (gain * path) ** (1.0 + gamma) / norm


# ---------------------------------------------------------------------------
# Single realizations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Realization:
    """Interferer positions and marks per type; ``received`` holds ``P H |X|**-alpha``."""

    positions: tuple[np.ndarray, ...]
    power: tuple[np.ndarray, ...]
    fading: tuple[np.ndarray, ...]
    alpha: float

    @property
    def received(self) -> np.ndarray:
        parts = [
            p * h * np.hypot(xy[:, 0], xy[:, 1]) ** (-self.alpha)
            for xy, p, h in zip(self.positions, self.power, self.fading)
        ]
        return np.concatenate(parts) if parts else np.empty(0)

    @property
    def count(self) -> int:
        return sum(len(p) for p in self.power)


def sample_network(scenario: SimScenario, rng: np.random.Generator) -> Realization:
    """One marked Poisson realization on the simulation disk (the typical pair excluded)."""
    net = scenario.net
    radius = scenario.radius
    positions, powers, gains = [], [], []
    for t in net.types:
        n = rng.poisson(t.intensity * math.pi * radius**2)
        r = radius * np.sqrt(rng.random(n))
        phi = 2.0 * math.pi * rng.random(n)
        positions.append(np.column_stack((r * np.cos(phi), r * np.sin(phi))))
        powers.append(_transmit_power(t, net.alpha, rng, n))
        gains.append(np.asarray(t.fading.sample(rng, n), dtype=float))
    return Realization(tuple(positions), tuple(powers), tuple(gains), net.alpha)


def _residual(received: np.ndarray, cancel: int) -> float:
    if received.size <= cancel:
        return 0.0
    if cancel == 0:
        return float(received.sum())
    kept = np.partition(received, received.size - cancel)[: received.size - cancel]
    return float(kept.sum())


def sir_sample(
    scenario: SimScenario, rng: np.random.Generator, realization: Realization | None = None
) -> float:
    """One SIR draw for the typical receiver; ``inf`` when no interference remains."""
    realization = sample_network(scenario, rng) if realization is None else realization
    t = scenario.net.types[scenario.typical_type]
    signal = float(_signal_power(t, scenario.net.alpha, rng, 1)[0])
    interference = _residual(realization.received, scenario.cancellations)
    if interference == 0.0:
        return math.inf
    return signal / (interference + scenario.far_field_offset)


# ---------------------------------------------------------------------------
# Vectorized replications
# ---------------------------------------------------------------------------


def _top_ranked(terms, owners, count, size):
    """Mask of each owner's ``count`` largest terms."""
    order = np.lexsort((-terms, owners))
    sorted_owners = owners[order]
    starts = np.searchsorted(sorted_owners, np.arange(size))
    rank = np.arange(terms.size) - starts[sorted_owners]
    mask = np.zeros(terms.size, dtype=bool)
    mask[order[rank < count]] = True
    return mask


def _strongest_mask(terms, owners, radii, count, size, net) -> np.ndarray:
    """Mask of each owner's ``count`` largest terms.

    The ``count``-th largest term among nearby points is a lower bound on the
    owner's ``count``-th largest overall, so only terms at or above it need
    sorting.
    """
    near_radius = math.sqrt((4 * count + 20) / (math.pi * float(net.intensities.sum())))
    near = radii <= near_radius
    threshold = np.zeros(size)
    if near.any():
        sub_terms, sub_owners = terms[near], owners[near]
        top = _top_ranked(sub_terms, sub_owners, count, size)
        full = np.bincount(sub_owners[top], minlength=size) == count
        kth = np.full(size, np.inf)
        np.minimum.at(kth, sub_owners[top], sub_terms[top])
        threshold = np.where(full, kth, 0.0)
    candidates = np.flatnonzero(terms >= threshold[owners])
    mask = np.zeros(terms.size, dtype=bool)
    mask[candidates[_top_ranked(terms[candidates], owners[candidates], count, size)]] = True
    return mask


def _simulate_block(scenario: SimScenario, block: int, size: int):
    net = scenario.net
    rng = block_rng(scenario.seed, block)
    radius = scenario.radius
    terms, owners, radii = [], [], []
    for t in net.types:
        counts = rng.poisson(t.intensity * math.pi * radius**2, size)
        n = int(counts.sum())
        r = radius * np.sqrt(rng.random(n))
        received = _transmit_power(t, net.alpha, rng, n) * t.fading.sample(rng, n) * r ** (-net.alpha)
        terms.append(np.asarray(received, dtype=float))
        owners.append(np.repeat(np.arange(size), counts))
        radii.append(r)
    terms = np.concatenate(terms)
    owners = np.concatenate(owners)
    present = np.bincount(owners, minlength=size) > 0
    cancel = scenario.cancellations
    if cancel > 0 and terms.size:
        keep = ~_strongest_mask(terms, owners, np.concatenate(radii), cancel, size, net)
        interference = np.bincount(owners[keep], weights=terms[keep], minlength=size)
        present &= np.bincount(owners, minlength=size) > cancel
    else:
        interference = np.bincount(owners, weights=terms, minlength=size)
    interference = np.where(present, interference + scenario.far_field_offset, 0.0)
    signals = np.stack([_signal_power(t, net.alpha, rng, size) for t in net.types])
    return interference, signals


@dataclass(frozen=True)
class SirDraws:
    """Per-replication interference and signal powers for every type's typical receiver.

    ``interference`` is the residual after cancellation; zero marks an empty
    field, whose SIR is the ``+inf`` sentinel.
    """

    scenario: SimScenario
    interference: np.ndarray
    signals: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.interference.size

    def sir(self, k: int | None = None) -> np.ndarray:
        k = self.scenario.typical_type if k is None else k
        with np.errstate(divide="ignore"):
            return np.where(self.interference > 0, self.signals[k] / self.interference, np.inf)

    def _finite(self, values: np.ndarray) -> np.ndarray:
        finite = np.isfinite(values)
        frac = 1.0 - finite.mean() if values.size else 0.0
        if frac > _SENTINEL_WARN_FRACTION:
            warnings.warn(
                f"{frac:.2e} of replications saw no interference and were excluded",
                QualityWarning,
                stacklevel=3,
            )
        return values[finite]

    def success_prob(self, theta: float | None = None, k: int | None = None) -> Estimate:
        theta = self.scenario.net.theta if theta is None else theta
        return _estimate((self.sir(k) > theta).astype(float), self.scenario.seed)

    def cdf_grid(self, thetas: Sequence[float], k: int | None = None) -> list[Estimate]:
        sir = self.sir(k)
        return [_estimate((sir <= th).astype(float), self.scenario.seed) for th in thetas]

    def ergodic_capacity(self, k: int | None = None) -> Estimate:
        return _estimate(np.log2(1.0 + self._finite(self.sir(k))), self.scenario.seed)

    def fractional_moment(self, delta: float, k: int | None = None) -> Estimate:
        return _estimate(self._finite(self.sir(k)) ** delta, self.scenario.seed)

    def laplace_interference(self, s: float) -> Estimate:
        return _estimate(np.exp(-s * self.interference), self.scenario.seed)

    def throughput(self, theta: float | None = None) -> Estimate:
        """``sum_k lambda_k p_k c_k`` with a delta-method standard error."""
        theta = self.scenario.net.theta if theta is None else theta
        net = self.scenario.net
        columns = []
        for k in range(net.K):
            sir = self.sir(k)
            columns.append((sir > theta).astype(float))
            columns.append(np.where(np.isfinite(sir), np.log2(1.0 + np.where(np.isfinite(sir), sir, 0.0)), 0.0))
        data = np.stack(columns)
        means = data.mean(axis=1)
        lam = net.intensities
        value = float(sum(lam[k] * means[2 * k] * means[2 * k + 1] for k in range(net.K)))
        grad = np.empty(2 * net.K)
        for k in range(net.K):
            grad[2 * k] = lam[k] * means[2 * k + 1]
            grad[2 * k + 1] = lam[k] * means[2 * k]
        cov = np.atleast_2d(np.cov(data)) if self.n > 1 else np.zeros((2 * net.K, 2 * net.K))
        stderr = math.sqrt(max(float(grad @ cov @ grad), 0.0) / self.n)
        return Estimate(value, stderr, self.n, self.scenario.seed)


def simulate(scenario: SimScenario, workers: int = 1) -> SirDraws:
    """Run all replications; output is identical for any ``workers``."""
    blocks = range(math.ceil(scenario.replications / BLOCK_SIZE))

    def run(b):
        size = min(BLOCK_SIZE, scenario.replications - b * BLOCK_SIZE)
        return _simulate_block(scenario, b, size)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    interference = np.concatenate([p[0] for p in parts])
    signals = np.concatenate([p[1] for p in parts], axis=1)
    return SirDraws(scenario, interference, signals)


_METRICS = ("success_prob", "cdf_grid", "ergodic_capacity", "fractional_moment",
            "laplace_interference", "throughput")


def estimate(scenario: SimScenario, metric: str, **params):
    """Plug-in Monte Carlo estimate of ``metric`` for the typical receiver.

    ``metric`` is one of ``success_prob(theta)``, ``cdf_grid(thetas)``,
    ``ergodic_capacity``, ``fractional_moment(delta)``,
    ``laplace_interference(s)`` and ``throughput(theta)``.
    """
    if metric not in _METRICS:
        raise ValueError(f"unknown metric {metric!r}; expected one of {_METRICS}")
    draws = simulate(scenario, workers=params.pop("workers", 1))
    return getattr(draws, metric)(**params)


def biased_nearest_distance_test(
    scenario: SimScenario,
    samples: int,
    *,
    intensity_factor: float = 1.0,
) -> tuple[float, float]:
    """KS test of ``min_i ((P_i H_i)**(-1/alpha) |X_i|)**2`` against Exp(pi lambda').

    Returns ``(statistic, p_value)``. ``intensity_factor`` scales the reference
    intensity, for power checks.
    """
    net = scenario.net
    radius = scenario.window_radius or nearest_window_radius(net)
    values = np.empty(samples)
    filled = 0
    block = 0
    while filled < samples:
        size = min(BLOCK_SIZE, samples - filled)
        rng = block_rng(scenario.seed, block)
        best = np.full(size, np.inf)
        for t in net.types:
            counts = rng.poisson(t.intensity * math.pi * radius**2, size)
            n = int(counts.sum())
            r = radius * np.sqrt(rng.random(n))
            marks = _transmit_power(t, net.alpha, rng, n) * t.fading.sample(rng, n)
            mapped = marks ** (-2.0 / net.alpha) * r**2
            owners = np.repeat(np.arange(size), counts)
            np.minimum.at(best, owners, mapped)
        values[filled : filled + size] = best
        filled += size
        block += 1
    rate = math.pi * mapped_intensity(net) * intensity_factor
    res = stats.kstest(values, stats.expon(scale=1.0 / rate).cdf)
    return float(res.statistic), float(res.pvalue)
