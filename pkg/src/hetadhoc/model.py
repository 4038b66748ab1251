"""Network description: marks, type classes, and the effective intensities
that every analytic formula consumes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import DivergenceError, DomainError

__all__ = [
    "DistributionSpec",
    "TypeClassConfig",
    "NetworkConfig",
    "DerivedIntensities",
    "PowerControlSpec",
    "SignalLaw",
    "fractional_moment",
    "derive_intensities",
    "mapped_intensity",
    "signal_law",
    "table1_network",
]

_KINDS = ("constant", "exponential", "gamma", "erlang")


@dataclass(frozen=True)
class DistributionSpec:
    """A nonnegative random variable: constant, exponential, gamma or Erlang.

    Every kind is parameterised by its mean; gamma and Erlang also carry a
    shape (integer for Erlang). Exponential is gamma with shape 1.
    """

    kind: str
    mean: float
    shape: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}")
        if not (self.mean > 0 and math.isfinite(self.mean)):
            raise ValueError("distribution mean must be positive and finite")
        if self.kind == "exponential" and self.shape != 1.0:
            raise ValueError("exponential distributions have shape 1")
        if self.kind in ("gamma", "erlang") and not self.shape > 0:
            raise ValueError("shape must be positive")
        if self.kind == "erlang" and self.shape != int(self.shape):
            raise ValueError("Erlang shape must be an integer")

    # constructors -------------------------------------------------------
    @classmethod
    def constant(cls, value: float) -> "DistributionSpec":
        return cls("constant", float(value))

    @classmethod
    def exponential(cls, mean: float = 1.0) -> "DistributionSpec":
        return cls("exponential", float(mean))

    @classmethod
    def gamma(cls, shape: float, mean: float = 1.0) -> "DistributionSpec":
        return cls("gamma", float(mean), float(shape))

    @classmethod
    def erlang(cls, shape: int, mean: float = 1.0) -> "DistributionSpec":
        return cls("erlang", float(mean), float(shape))

    # basic properties ---------------------------------------------------
    @property
    def is_constant(self) -> bool:
        return self.kind == "constant"

    @property
    def scale(self) -> float:
        """Gamma scale parameter (mean / shape); the value itself for constants."""
        return self.mean if self.is_constant else self.mean / self.shape

    @property
    def integer_shape(self) -> int | None:
        """Shape as an int when the law is exponential/Erlang/integer gamma."""
        if self.is_constant:
            return None
        if float(self.shape).is_integer():
            return int(self.shape)
        return None

    def with_mean(self, mean: float) -> "DistributionSpec":
        return replace(self, mean=float(mean))

    def scaled(self, factor: float) -> "DistributionSpec":
        return replace(self, mean=self.mean * float(factor))

    def moment(self, p: float) -> float:
        return fractional_moment(self, p)

    # distribution functions ---------------------------------------------
    def sample(self, rng: np.random.Generator, size=None):
        if self.is_constant:
            return np.full(size, self.mean) if size is not None else self.mean
        return rng.gamma(self.shape, self.scale, size=size)

    def laplace(self, s):
        """``E[exp(-s X)]``, valid for complex ``s`` with ``Re(s) > -1/scale``."""
        s = np.asarray(s)
        if self.is_constant:
            return np.exp(-s * self.mean)
        return (1.0 + s * self.scale) ** (-self.shape)

    def pdf(self, x):
        if self.is_constant:
            raise DomainError("a constant has no density")
        x = np.asarray(x, dtype=float)
        m, b = self.shape, self.scale
        with np.errstate(divide="ignore", invalid="ignore"):
            logpdf = (m - 1.0) * np.log(x / b) - x / b - special.gammaln(m) - math.log(b)
        return np.where(x > 0, np.exp(logpdf), 0.0)

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.is_constant:
            return np.where(x < self.mean, 1.0, 0.0)
        return special.gammaincc(self.shape, np.maximum(x, 0.0) / self.scale)

    def cdf(self, x):
        return 1.0 - self.ccdf(x)

    def quantile(self, q):
        if self.is_constant:
            return np.full(np.shape(q), self.mean) if np.ndim(q) else self.mean
        return special.gammaincinv(self.shape, q) * self.scale

    def expect(self, g: Callable[[float], float], rel_tol: float = 1e-10) -> float:
        """``E[g(X)]`` by adaptive quadrature against the gamma density."""
        if self.is_constant:
            return float(g(self.mean))
        m, b = self.shape, self.scale
        log_norm = -special.gammaln(m)

        def integrand(t):
            if t <= 0.0:
                return 0.0
            return float(g(b * t)) * math.exp((m - 1.0) * math.log(t) - t + log_norm)

        hi = special.gammaincinv(m, 1.0 - 1e-16)
        edges = sorted({0.0, *special.gammaincinv(m, [0.01, 0.5, 0.99]).tolist(), hi})
        total = 0.0
        for lo, up in zip(edges[:-1], edges[1:]):
            val, _ = integrate.quad(integrand, lo, up, epsabs=1e-15, epsrel=rel_tol, limit=200)
            total += val
        return total


def fractional_moment(spec: DistributionSpec, p: float) -> float:
    """``E[X**p]`` in closed form.

    Raises
    ------
    DivergenceError
        When the moment is infinite (gamma-type laws with ``shape + p <= 0``).
    """
    p = float(p)
    if spec.is_constant:
        return spec.mean**p
    m = spec.shape
    if m + p <= 0:
        raise DivergenceError(
            f"moment of order {p} diverges for a {spec.kind} law with shape {m}"
        )
    return spec.scale**p * math.exp(special.gammaln(m + p) - special.gammaln(m))


def _check_distance(spec: DistributionSpec) -> DistributionSpec:
    # The model requires link distances in [1, inf); only constants fit that support.
    if not spec.is_constant:
        raise ValueError("link distance must be a constant (support must lie in [1, inf))")
    if spec.mean < 1.0:
        raise ValueError("link distance must be at least 1 m")
    return spec


@dataclass(frozen=True)
class TypeClassConfig:
    """One transmitter class.

    ``fading`` is rescaled to unit mean on construction. ``rx_antennas > 1``
    models a receive-beamforming link whose gain is Erlang with that many
    phases; it requires Rayleigh fading.
    """

    intensity: float
    power: DistributionSpec = field(default_factory=lambda: DistributionSpec.constant(1.0))
    fading: DistributionSpec = field(default_factory=DistributionSpec.exponential)
    distance: DistributionSpec = field(default_factory=lambda: DistributionSpec.constant(10.0))
    pc_exponent: float = 0.0
    rx_antennas: int = 1

    def __post_init__(self):
        if not self.intensity > 0:
            raise ValueError("intensity must be positive")
        if self.fading.mean != 1.0:
            object.__setattr__(self, "fading", self.fading.with_mean(1.0))
        _check_distance(self.distance)
        if not self.pc_exponent >= -1.0:
            raise ValueError("power-control exponent must be at least -1")
        if int(self.rx_antennas) != self.rx_antennas or self.rx_antennas < 1:
            raise ValueError("rx_antennas must be a positive integer")
        if self.rx_antennas > 1 and self.fading.kind != "exponential":
            raise ValueError("multi-antenna receivers are modelled for Rayleigh fading only")

    @property
    def link_distance(self) -> float:
        return self.distance.mean

    @property
    def signal_gain(self) -> DistributionSpec:
        """Law of the desired-link gain (sum of per-antenna gains)."""
        if self.rx_antennas == 1:
            return self.fading
        return DistributionSpec.erlang(self.rx_antennas, float(self.rx_antennas))

    def power_moment(self, p: float, alpha: float) -> float:
        """``E[P**p]`` including the channel-dependent power-control law."""
        gamma = self.pc_exponent
        if gamma == 0.0:
            return fractional_moment(self.power, p)
        mean_power = self.power.mean
        h = self.fading
        r_pow = self.link_distance ** (-alpha)
        num = fractional_moment(h, gamma * p) * r_pow ** (gamma * p)
        den = (fractional_moment(h, gamma) * r_pow**gamma) ** p
        return mean_power**p * num / den


@dataclass(frozen=True)
class NetworkConfig:
    """K transmitter classes, path-loss exponent, SIR threshold and cancellation depth."""

    types: tuple[TypeClassConfig, ...]
    alpha: float = 4.0
    theta: float = 1.0
    cancel_count: int = 0

    def __post_init__(self):
        object.__setattr__(self, "types", tuple(self.types))
        if len(self.types) < 1:
            raise ValueError("at least one transmitter type is required")
        if not self.alpha > 2:
            raise ValueError("path-loss exponent must exceed 2")
        if not self.theta > 0:
            raise ValueError("SIR threshold must be positive")
        if self.cancel_count < 0:
            raise ValueError("cancel_count must be nonnegative")

    @property
    def K(self) -> int:
        return len(self.types)

    @property
    def intensities(self) -> np.ndarray:
        return np.array([t.intensity for t in self.types])

    def scaled(self, factor: float) -> "NetworkConfig":
        """All intensities multiplied by ``factor``."""
        return replace(
            self, types=tuple(replace(t, intensity=t.intensity * factor) for t in self.types)
        )

    def with_first_intensity(self, lam1: float) -> "NetworkConfig":
        """Rescale intensities, keeping their ratios, so type 1 has ``lam1``."""
        return self.scaled(lam1 / self.types[0].intensity)

    def with_theta(self, theta: float) -> "NetworkConfig":
        return replace(self, theta=float(theta))

    def with_types(self, **changes) -> "NetworkConfig":
        return replace(self, types=tuple(replace(t, **changes) for t in self.types))

    def signal_mean(self, k: int) -> float:
        """``E[S_k]`` for independent marks (no power control)."""
        t = self.types[k]
        return t.power.mean * t.signal_gain.mean * t.link_distance ** (-self.alpha)


@dataclass(frozen=True)
class DerivedIntensities:
    lambda_tilde_k: tuple[float, ...]
    lambda_tilde: float
    lambda_tilde_pc: float
    Lambda_tilde_k: tuple[float, ...]


def derive_intensities(net: NetworkConfig) -> DerivedIntensities:
    """Effective intensities of the network.

    ``lambda_tilde_k = lambda_k E[H**x] E[P**x]`` with ``x = 2/alpha``;
    ``lambda_tilde_pc`` uses the transmit-power law implied by each type's
    power-control exponent (it equals ``lambda_tilde`` when all exponents are 0).
    """
    x = 2.0 / net.alpha
    per_type, per_type_pc = [], []
    for t in net.types:
        h_moment = fractional_moment(t.fading, x)
        per_type.append(t.intensity * h_moment * fractional_moment(t.power, x))
        per_type_pc.append(t.intensity * h_moment * t.power_moment(x, net.alpha))
    total = math.fsum(per_type)
    norm = tuple(math.pi * total / net.signal_mean(k) ** x for k in range(net.K))
    return DerivedIntensities(tuple(per_type), total, math.fsum(per_type_pc), norm)


def mapped_intensity(net: NetworkConfig) -> float:
    """Intensity of the point set ``{(P_i H_i)**(-1/alpha) X_i}``.

    Equals ``sum_k lambda_k E[(P_k H_k)**(2/alpha)]``; the transmit power law
    includes power control when configured.
    """
    x = 2.0 / net.alpha
    return math.fsum(
        t.intensity * fractional_moment(t.fading, x) * t.power_moment(x, net.alpha)
        for t in net.types
    )


@dataclass(frozen=True)
class PowerControlSpec:
    """Per-type exponent ``gamma_k`` and mean transmit power.

    ``gamma_k = 0`` is constant power. ``gamma_k = -1`` (channel inversion) is
    accepted so that capacity routines can report its degenerate limit.
    """

    gamma_k: tuple[float, ...]
    mean_power: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "gamma_k", tuple(float(g) for g in self.gamma_k))
        object.__setattr__(self, "mean_power", tuple(float(p) for p in self.mean_power))
        if len(self.gamma_k) != len(self.mean_power):
            raise ValueError("gamma_k and mean_power must have equal length")
        if any(not g >= -1.0 for g in self.gamma_k):
            raise ValueError("power-control exponents must be >= -1")
        if any(not p > 0 for p in self.mean_power):
            raise ValueError("mean powers must be positive")

    @classmethod
    def uniform(cls, net: NetworkConfig, gamma: float) -> "PowerControlSpec":
        return cls(tuple(gamma for _ in net.types), tuple(t.power.mean for t in net.types))

    @property
    def is_trivial(self) -> bool:
        return all(g == 0.0 for g in self.gamma_k)

    def apply(self, net: NetworkConfig) -> NetworkConfig:
        """Network whose types carry these exponents and constant mean powers."""
        if len(self.gamma_k) != net.K:
            raise ValueError("power-control spec does not match the number of types")
        types = []
        for t, g, p in zip(net.types, self.gamma_k, self.mean_power):
            if g != 0.0 and t.rx_antennas > 1:
                raise ValueError("power control with multi-antenna receivers is not modelled")
            types.append(replace(t, pc_exponent=g, power=DistributionSpec.constant(p)))
        return replace(net, types=tuple(types))


# ---------------------------------------------------------------------------
# Received signal power
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SignalLaw:
    """``S = constant * prod_i X_i**e_i`` with independent random ``X_i``."""

    constant: float
    factors: tuple[tuple[DistributionSpec, float], ...] = ()

    def __post_init__(self):
        constant = float(self.constant)
        random_factors = []
        for d, e in self.factors:
            if d.is_constant:
                constant *= d.mean ** float(e)
            else:
                random_factors.append((d, float(e)))
        object.__setattr__(self, "constant", constant)
        object.__setattr__(self, "factors", tuple(random_factors))

    @property
    def is_constant(self) -> bool:
        return not self.factors

    def moment(self, p: float) -> float:
        out = self.constant**p
        for d, e in self.factors:
            out *= fractional_moment(d, e * p)
        return out

    @property
    def mean(self) -> float:
        return self.moment(1.0)

    def power(self, e: float) -> "SignalLaw":
        return SignalLaw(self.constant**e, tuple((d, ex * e) for d, ex in self.factors))

    def scaled(self, c: float) -> "SignalLaw":
        return SignalLaw(self.constant * c, self.factors)

    @property
    def erlang_shape(self) -> int | None:
        """Integer shape when ``S / E[S]`` is Erlang (single gamma factor, exponent 1)."""
        if len(self.factors) == 1:
            d, e = self.factors[0]
            if e == 1.0:
                return d.integer_shape
        return None

    @property
    def single_factor(self) -> tuple[DistributionSpec, float] | None:
        return self.factors[0] if len(self.factors) == 1 else None

    def expect(self, g: Callable[[float], float]) -> float:
        """``E[g(S)]`` by nested quadrature over the random factors."""

        def nest(i: int, acc: float) -> float:
            if i == len(self.factors):
                return float(g(acc))
            d, e = self.factors[i]
            return d.expect(lambda v: nest(i + 1, acc * v**e))

        return nest(0, self.constant)

    def normalized_laplace(self, u: float) -> float:
        """``E[exp(-u S / E[S])]``."""
        shape = self.erlang_shape
        if self.is_constant:
            return math.exp(-u)
        if shape is not None or (
            self.single_factor is not None and self.single_factor[1] == 1.0
        ):
            d = self.factors[0][0]
            return float((1.0 + u / d.shape) ** (-d.shape))
        mean = self.mean
        return self.expect(lambda s: math.exp(-u * s / mean))

    def ccdf(self, x: float) -> float:
        if self.is_constant:
            return 1.0 if x < self.constant else 0.0
        if self.single_factor is not None:
            d, e = self.single_factor
            if x <= 0:
                return 1.0
            level = (x / self.constant) ** (1.0 / e)
            return float(d.ccdf(level)) if e > 0 else float(d.cdf(level))
        rest = SignalLaw(self.constant, self.factors[1:])
        d, e = self.factors[0]
        return d.expect(lambda v: rest.scaled(v**e).ccdf(x))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.full(size, self.constant)
        for d, e in self.factors:
            out = out * d.sample(rng, size) ** e
        return out


def signal_law(net: NetworkConfig, k: int) -> SignalLaw:
    """Law of ``S_k = P_k G_k R_k**(-alpha)`` ignoring power control."""
    t = net.types[k]
    return SignalLaw(t.link_distance ** (-net.alpha), ((t.power, 1.0), (t.signal_gain, 1.0)))


def table1_network(
    lam1: float = 1e-4,
    fading: DistributionSpec | None = None,
    rx_antennas: int = 1,
    alpha: float = 4.0,
    theta: float = 1.0,
    cancel_count: int = 0,
) -> NetworkConfig:
    """Three-class reference network: powers (1, 0.5, 0.05) W, intensities
    proportional to (1, 5, 10), 10 m links."""
    fading = fading or DistributionSpec.exponential()
    types = tuple(
        TypeClassConfig(
            intensity=lam1 * ratio,
            power=DistributionSpec.constant(p),
            fading=fading,
            rx_antennas=rx_antennas,
        )
        for ratio, p in zip((1.0, 5.0, 10.0), (1.0, 0.5, 0.05))
    )
    return NetworkConfig(types=types, alpha=alpha, theta=theta, cancel_count=cancel_count)
