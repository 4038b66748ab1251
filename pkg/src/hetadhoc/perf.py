"""Link and network performance metrics built on the SIR distribution."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import integrate, optimize, special

from . import numerics, sirdist
from .errors import (
    AccuracyError,
    CapabilityError,
    ConvergenceError,
    DivergenceError,
    DivergenceWarning,
)
from .model import (
    DistributionSpec,
    NetworkConfig,
    PowerControlSpec,
    SignalLaw,
    derive_intensities,
    signal_law,
)
from .sirdist import CancellationSpec, TruncatedBound

__all__ = [
    "PowerControlSpec",
    "ThroughputResult",
    "FadingRegion",
    "PcSuccessResult",
    "ThroughputReference",
    "shannon_transform",
    "shannon_transform_direct",
    "success_prob",
    "success_prob_bounds",
    "success_prob_cancel",
    "success_prob_cancel_upper",
    "fading_region",
    "success_prob_pc",
    "pc_benefit_check",
    "pc_signal_law",
    "success_prob_simo",
    "ergodic_capacity",
    "ergodic_capacity_via_success",
    "ergodic_capacity_cancel",
    "ergodic_capacity_cancel_upper",
    "ergodic_capacity_pc",
    "ergodic_capacity_pc_bounds",
    "capacity_pc_benefit_conditions",
    "ergodic_capacity_simo",
    "throughput_capacity",
    "optimize_throughput",
    "throughput_reference",
]

LN2 = math.log(2.0)


# ---------------------------------------------------------------------------
# Shannon transform
# ---------------------------------------------------------------------------


def _laplace_of_inverse(z: DistributionSpec, s):
    """``E[exp(-s / Z)]`` in closed form (Bessel K for gamma laws)."""
    s = np.asarray(s, dtype=float)
    if z.is_constant:
        return np.exp(-s / z.mean)
    m, b = z.shape, z.scale
    arg = 2.0 * np.sqrt(s / b)
    with np.errstate(invalid="ignore", over="ignore", under="ignore"):
        # 2 (s/b)^{m/2} K_m(2 sqrt(s/b)) / Gamma(m), with kve to avoid underflow
        log_val = (
            math.log(2.0) + 0.5 * m * np.log(s / b) + np.log(special.kve(m, arg)) - arg
            - special.gammaln(m)
        )
        out = np.exp(log_val)
    return np.where(s > 0, out, 1.0)


def shannon_transform(
    z: DistributionSpec,
    rho: float | DistributionSpec,
    settings: numerics.QuadratureSettings | None = None,
) -> float:
    """``E[ln(1 + rho Z)]`` through ``int_0^inf (1 - L_rho(s)) L_{1/Z}(s) ds / s``.

    ``rho`` is a number or an independent random variable.
    """
    if isinstance(rho, DistributionSpec):
        def kernel(s):
            return 1.0 - float(rho.laplace(s))
        rho_scale = rho.mean
    else:
        if rho < 0:
            raise ValueError("rho must be nonnegative")
        if rho == 0:
            return 0.0
        def kernel(s):
            return -math.expm1(-rho * s)
        rho_scale = rho

    def integrand(s):
        if s <= 0.0:
            return rho_scale
        return kernel(s) * float(_laplace_of_inverse(z, s)) / s

    scale = min(1.0 / rho_scale, z.mean) if rho_scale > 0 else 1.0
    return numerics.semi_infinite_integral(
        integrand, settings or numerics.QuadratureSettings(rel_tol=1e-10, abs_tol=1e-14), scale
    )


def shannon_transform_direct(z: DistributionSpec, rho: float | DistributionSpec) -> float:
    """``E[ln(1 + rho Z)]`` by direct quadrature over the densities."""
    if isinstance(rho, DistributionSpec):
        return z.expect(lambda zv: rho.expect(lambda rv: math.log1p(rv * zv)))
    return z.expect(lambda zv: math.log1p(rho * zv))


# ---------------------------------------------------------------------------
# Success probability
# ---------------------------------------------------------------------------


def success_prob(net: NetworkConfig, theta: float | None = None, k: int = 0) -> float:
    """``P[SIR_k > theta]``."""
    return 1.0 - sirdist.sir_cdf(net, theta, k).value


def success_prob_bounds(
    net: NetworkConfig, theta: float | None = None, k: int = 0
) -> tuple[float, float]:
    """``(lower, upper)`` bounds on the success probability."""
    lo_cdf, hi_cdf = sirdist.sir_cdf_bounds(net, theta, k)
    return 1.0 - hi_cdf, 1.0 - lo_cdf


def success_prob_cancel(
    net: NetworkConfig,
    cancel: CancellationSpec,
    theta: float | None = None,
    k: int = 0,
    *,
    compensation: bool = True,
) -> float:
    """Success probability after cancelling the ``L`` strongest interferers."""
    return 1.0 - sirdist.sir_cdf_cancel(net, cancel, theta, k, compensation=compensation).value


def success_prob_cancel_upper(
    net: NetworkConfig, cancel: CancellationSpec, theta: float | None = None, k: int = 0
) -> TruncatedBound:
    """Moment-generating-function upper bound on the cancelled success probability.

    Available for exponentially distributed normalized signal power, where it
    reads ``L_I(s) M(pi lambda_tilde s)`` with ``s = theta / E[S]``. The value is
    capped at 1.
    """
    theta = net.theta if theta is None else theta
    law = signal_law(net, k)
    if law.erlang_shape != 1:
        raise CapabilityError(
            "the cancellation upper bound is implemented for exponential signal power only"
        )
    bound = sirdist.laplace_residual_upper_bound(net, cancel, theta / law.mean)
    return TruncatedBound(min(1.0, bound.value), bound.sensitive, bound.d_min)


# ---------------------------------------------------------------------------
# When does signal randomness hurt?
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FadingRegion:
    """Normalized intensities ``Lambda = pi lambda_tilde / E[S]**(2/alpha)`` where
    Gamma(m, 1/m) fading on every link lowers the success probability compared
    with the same network without fading.

    ``lambda_tilde`` is the intensity measure of the faded network.
    ``intervals`` come from comparing the two exact success probabilities;
    ``sufficient_intervals`` is the set given by the exponential-versus-linear
    sufficient condition. ``boundary`` is the right end of the first exact interval.
    """

    alpha: float
    theta: float
    m: int
    intervals: tuple[tuple[float, float], ...]
    sufficient_intervals: tuple[tuple[float, float], ...]
    diagnostic: str = ""

    @property
    def boundary(self) -> float | None:
        return self.intervals[0][1] if self.intervals else None

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    def contains(self, value: float) -> bool:
        return any(lo < value < hi for lo, hi in self.intervals)


def _success_gamma_signal(norm_intensity, alpha, theta, m):
    x = 2.0 / alpha
    coeff = special.gamma(1.0 - x) * norm_intensity
    return sirdist.erlang_success_closed_form(coeff, x, m, m * theta)


def _success_without_fading(norm_intensity, alpha, theta, m):
    # removing fading rescales lambda_tilde by 1 / E[H^x], H ~ Gamma(m, 1/m)
    x = 2.0 / alpha
    fading_moment = math.exp(special.gammaln(m + x) - special.gammaln(m) - x * math.log(m))
    coeff = special.gamma(1.0 - x) * norm_intensity / fading_moment
    return float(sirdist.interference_cdf(coeff, x, 1.0 / theta)[0])


def _sign_intervals(fn, lo, hi, points=400):
    grid = np.geomspace(lo, hi, points)
    vals = np.array([fn(g) for g in grid])
    inside = vals <= 0.0
    intervals = []
    start = 0.0 if inside[0] else None
    for i in range(1, len(grid)):
        if inside[i] != inside[i - 1]:
            root = optimize.brentq(fn, grid[i - 1], grid[i], xtol=1e-14, rtol=1e-13)
            if inside[i]:
                start = root
            else:
                intervals.append((start, root))
                start = None
    if start is not None:
        intervals.append((start, math.inf))
    return tuple(intervals)


def fading_region(alpha: float, theta: float, m: int = 1) -> FadingRegion:
    """Region of normalized intensity where fading hurts the success probability.

    At ``alpha = 4`` and ``m = 1`` the boundary solves
    ``exp(-sqrt(pi theta) u) = erfc(sqrt(theta) u)``.
    """
    if int(m) != m or m < 1:
        raise ValueError("m must be a positive integer")
    x = 2.0 / alpha
    lo, hi = 1e-6 / theta**x, 1e3 / theta**x

    def exact_gap(u):
        return _success_gamma_signal(u, alpha, theta, m) - _success_without_fading(
            u, alpha, theta, m
        )

    if m == 1:
        varsigma = 1.0
    else:
        varsigma = math.factorial(m - 1) / math.prod(i - x for i in range(1, m))

    def sufficient_gap(u):
        return math.exp(-special.gamma(1.0 - x) * (m * theta) ** x * u) - (
            1.0 - varsigma * theta**x * u
        )

    intervals = _sign_intervals(exact_gap, lo, hi)
    # drop the far tail where both probabilities underflow to zero
    intervals = tuple(
        (a, b) for a, b in intervals if _success_without_fading(a, alpha, theta, m) > 1e-300
    )
    sufficient = _sign_intervals(sufficient_gap, lo, hi)
    diagnostic = "" if intervals else "no sign change of the success-probability gap was bracketed"
    return FadingRegion(alpha, theta, m, intervals, sufficient, diagnostic)


# ---------------------------------------------------------------------------
# Power control
# ---------------------------------------------------------------------------


def pc_signal_law(net: NetworkConfig, pc: PowerControlSpec, k: int) -> SignalLaw:
    """Law of the power-controlled signal ``S**(1+gamma) / E[S**gamma]``."""
    base = signal_law(pc.apply(net).with_types(pc_exponent=0.0), k)
    gamma = pc.gamma_k[k]
    if gamma == 0.0:
        return base
    return base.power(1.0 + gamma).scaled(1.0 / base.moment(gamma))


def _pc_setup(net: NetworkConfig, pc: PowerControlSpec, k: int):
    controlled = pc.apply(net)
    base = signal_law(controlled.with_types(pc_exponent=0.0), k)
    lt_pc = derive_intensities(controlled).lambda_tilde_pc
    return controlled, base, pc_signal_law(net, pc, k), lt_pc


@dataclass(frozen=True)
class PcSuccessResult:
    """Success probability under power control.

    ``value`` is exact when available (always at ``alpha = 4``, or when
    ``numeric=True`` was requested). ``upper_valid`` reports whether the CCDF
    hypothesis behind the upper bound was verified for the signal law.
    """

    value: float | None
    lower: float
    upper: float
    upper_valid: bool


def _ccdf_is_concave(law: SignalLaw) -> bool:
    if law.is_constant:
        return False
    qs = np.linspace(0.001, 0.999, 200)
    single = law.single_factor
    if single is not None:
        d, e = single
        levels = law.constant * np.asarray(d.quantile(qs)) ** e
    else:
        levels = np.geomspace(law.mean * 1e-3, law.mean * 1e2, 200)
    levels = np.unique(np.sort(levels))
    values = np.array([law.ccdf(v) for v in levels])
    slopes = np.diff(values) / np.diff(levels)
    return bool(np.all(np.diff(slopes) <= 1e-12 * np.max(np.abs(slopes))))


def success_prob_pc(
    net: NetworkConfig,
    pc: PowerControlSpec,
    theta: float | None = None,
    k: int = 0,
    *,
    numeric: bool = False,
) -> PcSuccessResult:
    """Success probability when transmit power follows the stochastic power-control law.

    Raises
    ------
    DivergenceError
        If a required moment of the uncontrolled signal power is infinite.
    """
    theta = net.theta if theta is None else theta
    controlled, base, law_pc, lt_pc = _pc_setup(net, pc, k)
    gamma = pc.gamma_k[k]
    x = 2.0 / net.alpha
    a_pc = sirdist.interference_coefficient(net, lt_pc)
    s_gamma = base.moment(gamma)
    neg = base.moment(-x * (1.0 + gamma))
    lower = max(0.0, 1.0 - math.pi * lt_pc * s_gamma**x * neg * theta**x)
    # F^c_S evaluated at E[(theta E[S^gamma] I)^q], q = 1/(1+gamma); E[I^q] is finite for q < x
    q = 1.0 / (1.0 + gamma)
    if q < x:
        interference_moment = special.gamma(1.0 - q / x) / special.gamma(1.0 - q) * a_pc ** (q / x)
        upper = float(base.ccdf((theta * s_gamma) ** q * interference_moment))
    else:
        upper = 1.0
    value = None
    if net.alpha == 4.0 or numeric:
        value = 1.0 - sirdist.sir_cdf(controlled, theta, k, law=law_pc, lambda_tilde=lt_pc).value
    if net.alpha == 4.0:
        jensen = float(
            special.erfc(
                math.pi**1.5 * lt_pc * math.sqrt(theta) / 2.0
                * base.moment(-(gamma + 1.0) / 2.0) * math.sqrt(s_gamma)
            )
        )
        lower = max(lower, jensen)
    return PcSuccessResult(value, lower, upper, _ccdf_is_concave(base))


def pc_benefit_check(
    net: NetworkConfig, pc: PowerControlSpec, theta: float | None = None, k: int = 0
) -> tuple[bool, float]:
    """Whether power control raises the type-``k`` success probability, and by how much."""
    theta = net.theta if theta is None else theta
    plain = success_prob(pc.apply(net).with_types(pc_exponent=0.0), theta, k)
    controlled = success_prob_pc(net, pc, theta, k, numeric=True).value
    margin = controlled - plain
    return margin > 0.0, margin


# ---------------------------------------------------------------------------
# Multi-antenna receivers
# ---------------------------------------------------------------------------


def _simo_net(net: NetworkConfig, k: int, rx_antennas: int) -> NetworkConfig:
    types = list(net.types)
    t = types[k]
    from dataclasses import replace

    if t.fading.kind != "exponential":
        raise ValueError("multi-antenna receivers are modelled for Rayleigh fading only")
    types[k] = replace(t, rx_antennas=rx_antennas)
    return replace(net, types=tuple(types))


def success_prob_simo(
    net: NetworkConfig, k: int, rx_antennas: int, theta: float | None = None
) -> float:
    """Success probability with an ``rx_antennas``-branch maximum-ratio receiver, ``alpha = 4``.

    ``(-1)^{M-1} M^M/(M-1)! d^{M-1}/dy^{M-1}[exp(-c sqrt(y)) / y]`` at ``y = M``.
    """
    theta = net.theta if theta is None else theta
    if net.alpha != 4.0:
        raise CapabilityError("the multi-antenna closed form requires alpha = 4")
    m = int(rx_antennas)
    if m < 1:
        raise ValueError("rx_antennas must be at least 1")
    if m - 1 > numerics.MAX_DERIVATIVE_ORDER:
        raise CapabilityError(f"{m} antennas exceed the supported derivative order")
    simo = _simo_net(net, k, m)
    t = simo.types[k]
    if not (t.power.is_constant and t.distance.is_constant):
        raise CapabilityError("constant transmit power and distance are required")
    a = sirdist.interference_coefficient(simo)
    c = a * math.sqrt(theta / (m * t.power.mean * t.link_distance ** (-4.0)))
    expr = [numerics.ExpPolyTerm(1.0, -1.0, c, 0.5)]
    deriv = numerics.exppoly_derivative(expr, m - 1)
    value = (-1.0) ** (m - 1) * m**m / math.factorial(m - 1) * numerics.exppoly_evaluate(deriv, float(m))
    return float(min(1.0, max(0.0, value)))


# ---------------------------------------------------------------------------
# Ergodic capacity
# ---------------------------------------------------------------------------


def _closed_signal_laplace(law: SignalLaw):
    """``u -> E[exp(-u S/E[S])]`` when available in closed form, else ``None``."""
    if law.is_constant:
        return lambda u: math.exp(-u)
    single = law.single_factor
    if single is not None and single[1] == 1.0:
        shape = single[0].shape
        return lambda u: (1.0 + u / shape) ** (-shape)
    return None


def _log_grid_capacity_kernel(sigma: float, x: float, step: float = 0.02) -> float:
    """``int_0^inf (1 - exp(-sigma w)) exp(-w**x) dw / w`` by the trapezoid rule in ``log w``."""
    if sigma <= 0.0:
        return 0.0
    u_lo = math.log(1e-18 / sigma)
    u_hi = math.log(60.0) / x
    if u_hi <= u_lo:
        return 0.0
    u = np.arange(u_lo, u_hi + step, step)
    w = np.exp(u)
    vals = -np.expm1(-sigma * w) * np.exp(-(w**x))
    return float(integrate.trapezoid(vals, u))


def _capacity_quadrature(kernel, transform, scale: float) -> float:
    def integrand(v):
        if v <= 0.0:
            return 1.0
        return kernel(v) * transform(v)

    settings = numerics.QuadratureSettings(rel_tol=1e-9, abs_tol=1e-13)
    return numerics.semi_infinite_integral(integrand, settings, scale) / LN2


def _constant_signal_series(normalized: float, alpha: float) -> tuple[float, float]:
    """Optimally truncated alternating series for the constant-signal capacity.

    ``normalized = S / A**(alpha/2)``. Returns the partial sum in bits and the
    magnitude of the first omitted term.
    """
    total, smallest = 0.0, math.inf
    n = 1
    while n < 400:
        log_term = special.gammaln(alpha * n / 2.0) + n * math.log(normalized) - special.gammaln(n + 1)
        term = math.exp(log_term) if log_term < 700 else math.inf
        if term >= smallest:
            break
        smallest = term
        total += (-1.0) ** (n + 1) * term
        n += 1
    return alpha / (2.0 * LN2) * total, alpha / (2.0 * LN2) * smallest


def ergodic_capacity(
    net: NetworkConfig,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
    series_check: bool = True,
) -> float:
    """``E[log2(1 + SIR_k)]``.

    Uses ``(1/ln 2) int (1 - L_Shat(v)) L_I(v / E[S]) dv / v`` when the
    normalized signal transform is closed-form, and otherwise averages the
    constant-signal capacity over the signal law.

    Raises
    ------
    AccuracyError
        When, for a constant signal, the truncated series is informative and
        disagrees with the quadrature by more than ``1e-5``.
    """
    law = signal_law(net, k) if law is None else law
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    x = 2.0 / net.alpha
    a = sirdist.interference_coefficient(net, lt)
    mean = law.mean
    decay = mean * a ** (-1.0 / x)  # where the interference transform starts to bite
    closed = _closed_signal_laplace(law)
    if closed is not None:
        value = _capacity_quadrature(
            lambda v: -math.expm1(math.log(closed(v))) / v if v < 1e-12 else (1.0 - closed(v)) / v,
            lambda v: math.exp(-a * (v / mean) ** x),
            min(1.0, decay),
        )
    else:
        sigma_scale = a ** (-1.0 / x)
        value = law.expect(lambda sv: _log_grid_capacity_kernel(sv * sigma_scale, x)) / LN2
    if series_check and law.is_constant:
        series, tail = _constant_signal_series(law.constant / a ** (net.alpha / 2.0), net.alpha)
        if tail < 1e-7 and abs(series - value) > 1e-5 * max(1.0, abs(value)):
            raise AccuracyError("series and quadrature capacities disagree", (value, series))
    return value


def ergodic_capacity_via_success(
    net: NetworkConfig, k: int = 0, *, law: SignalLaw | None = None, lambda_tilde: float | None = None
) -> float:
    """``(1/ln 2) int_0^inf p_k(v) / (1 + v) dv``, integrated in ``log v``."""
    law = signal_law(net, k) if law is None else law
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde

    def integrand(w):
        v = math.exp(w)
        p = 1.0 - sirdist.sir_cdf(net, v, k, law=law, lambda_tilde=lt).value
        return p * v / (1.0 + v)

    x = 2.0 / net.alpha
    a = sirdist.interference_coefficient(net, lt)
    centre = math.log(law.mean * a ** (-1.0 / x))
    edges = centre + np.linspace(-40.0, 12.0, 53)
    total = sum(
        integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-10, limit=100)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    )
    return total / LN2


def _signal_kernel(law: SignalLaw):
    closed = _closed_signal_laplace(law)
    if closed is None:
        raise CapabilityError("a closed-form signal transform is required with cancellation")
    return lambda v: (1.0 - closed(v)) / v


def ergodic_capacity_cancel(
    net: NetworkConfig, cancel: CancellationSpec, k: int = 0, *, compensation: bool = True
) -> float:
    """Ergodic capacity after cancelling the ``L`` strongest interferers."""
    law = signal_law(net, k)
    lt = derive_intensities(net).lambda_tilde
    mean = law.mean
    x = 2.0 / net.alpha
    decay = mean * sirdist.interference_coefficient(net, lt) ** (-1.0 / x)
    return _capacity_quadrature(
        _signal_kernel(law),
        lambda v: sirdist.laplace_residual_interference(
            net, cancel, v / mean, compensation=compensation, lambda_tilde=lt
        ),
        min(1.0, decay),
    )


def ergodic_capacity_cancel_upper(
    net: NetworkConfig, cancel: CancellationSpec, k: int = 0
) -> TruncatedBound:
    """Upper bound on the cancelled capacity using the truncated MGF bound on the transform.

    The truncated exponent grows linearly in ``v`` while ``L_I`` decays only like
    ``exp(-A v**x)``, so the capped transform returns to 1 for large ``v`` and
    the ``dv / v`` tail makes the bound infinite. A doubling probe detects this
    before any quadrature is attempted.
    """
    law = signal_law(net, k)
    lt = derive_intensities(net).lambda_tilde
    mean = law.mean
    x = 2.0 / net.alpha
    decay = mean * sirdist.interference_coefficient(net, lt) ** (-1.0 / x)
    probe = sirdist.laplace_residual_upper_bound(net, cancel, decay / mean, lt)

    def transform(v):
        bound = sirdist.laplace_residual_upper_bound(
            net, cancel, v / mean, lt, check_sensitivity=False
        )
        return min(1.0, bound.value)

    v = decay
    for _ in range(80):
        if transform(v) >= 1.0:
            return TruncatedBound(math.inf, True, probe.d_min)
        v *= 2.0
    try:
        value = _capacity_quadrature(_signal_kernel(law), transform, min(1.0, decay))
    except ConvergenceError:
        value = math.inf
    return TruncatedBound(value, probe.sensitive, probe.d_min)


def _pc_capacity_terms(net: NetworkConfig, pc: PowerControlSpec, k: int):
    controlled, base, law_pc, lt_pc = _pc_setup(net, pc, k)
    return controlled, law_pc, lt_pc


def ergodic_capacity_pc(net: NetworkConfig, pc: PowerControlSpec, k: int = 0) -> float:
    """Ergodic capacity with stochastic power control.

    Channel inversion (``gamma = -1``) with an infinite ``E[S**-1]`` yields 0
    and a :class:`DivergenceWarning`.
    """
    gamma = pc.gamma_k[k]
    if gamma == -1.0:
        try:
            signal_law(net.with_types(pc_exponent=0.0), k).moment(-1.0)
        except DivergenceError:
            warnings.warn(
                "E[S^-1] is infinite under channel inversion; the capacity is 0",
                DivergenceWarning,
                stacklevel=2,
            )
            return 0.0
    controlled, law_pc, lt_pc = _pc_capacity_terms(net, pc, k)
    return ergodic_capacity(controlled, k, law=law_pc, lambda_tilde=lt_pc, series_check=False)


def ergodic_capacity_pc_bounds(
    net: NetworkConfig, pc: PowerControlSpec, k: int = 0
) -> tuple[float, float]:
    """``(lower, upper)``: the power-controlled interference transform against the
    ``1/(1+v)`` and ``(1 - e^-v)/v`` kernels."""
    controlled, law_pc, lt_pc = _pc_capacity_terms(net, pc, k)
    x = 2.0 / net.alpha
    a = sirdist.interference_coefficient(net, lt_pc)
    mean = law_pc.mean
    decay = mean * a ** (-1.0 / x)

    def transform(v):
        return math.exp(-a * (v / mean) ** x)

    lower = _capacity_quadrature(lambda v: 1.0 / (1.0 + v), transform, min(1.0, decay))
    upper = _capacity_quadrature(
        lambda v: -math.expm1(-v) / v, transform, min(1.0, decay)
    )
    return lower, upper


def capacity_pc_benefit_conditions(
    net: NetworkConfig, pc: PowerControlSpec, k: int = 0
) -> dict:
    """Evaluate the two sufficient conditions for power control to raise capacity.

    Returns the intensity-ratio condition, the signal-transform integral
    condition, and whether both hold.
    """
    controlled, base, law_pc, lt_pc = _pc_setup(net, pc, k)
    lt = derive_intensities(pc.apply(net).with_types(pc_exponent=0.0)).lambda_tilde
    gamma = pc.gamma_k[k]
    ratio_lhs = (lt_pc / lt) ** (net.alpha / 2.0)
    ratio_rhs = base.moment(1.0 + gamma) / (base.mean * base.moment(gamma))
    x = 2.0 / net.alpha
    a = sirdist.interference_coefficient(net, lt)
    mean = base.mean
    closed = _closed_signal_laplace(base)
    if closed is None:
        raise CapabilityError("a closed-form signal transform is required")
    pc_mean = law_pc.mean

    def pc_transform(v):
        # E[exp(-v S^pc / E[S^pc])]
        return law_pc.normalized_laplace(v)

    def integrand(v):
        if v <= 0:
            return 0.0
        return math.exp(-a * (v / mean) ** x) * (closed(v) - pc_transform(v)) / v

    integral = numerics.semi_infinite_integral(
        integrand, numerics.QuadratureSettings(rel_tol=1e-7, abs_tol=1e-12), min(1.0, mean * a ** (-1 / x))
    )
    return {
        "intensity_condition": ratio_lhs <= ratio_rhs,
        "transform_condition": integral >= 0.0,
        "both": ratio_lhs <= ratio_rhs and integral >= 0.0,
        "intensity_ratio": ratio_lhs,
        "moment_ratio": ratio_rhs,
        "transform_integral": integral,
        "pc_mean": pc_mean,
    }


def ergodic_capacity_simo(net: NetworkConfig, k: int, rx_antennas: int) -> float:
    """Capacity with an ``rx_antennas``-branch maximum-ratio receiver.

    ``(1/ln 2) int (1 - (1 + v/M)^-M) L_I(v R^alpha / (M P)) dv / v``.
    """
    m = int(rx_antennas)
    simo = _simo_net(net, k, m)
    t = simo.types[k]
    if not (t.power.is_constant and t.distance.is_constant):
        raise CapabilityError("constant transmit power and distance are required")
    a = sirdist.interference_coefficient(simo)
    x = 2.0 / net.alpha
    mean = m * t.power.mean * t.link_distance ** (-net.alpha)
    decay = mean * a ** (-1.0 / x)
    return _capacity_quadrature(
        lambda v: -math.expm1(-m * math.log1p(v / m)) / v,
        lambda v: math.exp(-a * (v / mean) ** x),
        min(1.0, decay),
    )


# ---------------------------------------------------------------------------
# Spatial throughput
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ThroughputResult:
    """Area spectral efficiency ``C = sum_k lambda_k p_k c_k`` in bps/Hz/m^2."""

    C: float
    per_type: tuple[tuple[float, float, float], ...]
    optimal_lambda: tuple[float, ...] | None = None
    optimizer_trace: tuple[tuple[float, float], ...] = ()


def throughput_capacity(
    net: NetworkConfig,
    theta: float | None = None,
    *,
    cancel: CancellationSpec | None = None,
    pc: PowerControlSpec | None = None,
) -> ThroughputResult:
    """Compose the matching success probability and capacity variants per type."""
    theta = net.theta if theta is None else theta
    if cancel is not None and pc is not None:
        raise CapabilityError("combined cancellation and power control is not modelled")
    rows = []
    for k, t in enumerate(net.types):
        if cancel is not None:
            p = success_prob_cancel(net, cancel, theta, k)
            c = ergodic_capacity_cancel(net, cancel, k)
        elif pc is not None:
            p = success_prob_pc(net, pc, theta, k, numeric=True).value
            c = ergodic_capacity_pc(net, pc, k)
        else:
            p = success_prob(net, theta, k)
            c = ergodic_capacity(net, k)
        rows.append((p, c, t.intensity * p * c))
    return ThroughputResult(math.fsum(r[2] for r in rows), tuple(rows))


def optimize_throughput(
    net: NetworkConfig,
    theta: float | None = None,
    *,
    cancel: CancellationSpec | None = None,
    pc: PowerControlSpec | None = None,
    lambda1_range: tuple[float, float] = (1e-7, 1e-1),
    rel_tol: float = 1e-4,
    scan_points: int = 25,
) -> ThroughputResult:
    """Maximize ``C`` over the type-1 intensity with the intensity ratios held fixed.

    A log-spaced scan brackets the maximum, then bounded Brent refinement in
    ``log lambda_1`` runs to ``rel_tol`` relative accuracy in ``lambda_1``.

    Raises
    ------
    ConvergenceError
        If the maximum sits on the edge of ``lambda1_range`` or refinement fails.
    """
    theta = net.theta if theta is None else theta
    trace: list[tuple[float, float]] = []

    def objective(log_lam):
        lam = math.exp(log_lam)
        value = throughput_capacity(net.with_first_intensity(lam), theta, cancel=cancel, pc=pc).C
        trace.append((lam, value))
        return -value

    grid = np.linspace(math.log(lambda1_range[0]), math.log(lambda1_range[1]), scan_points)
    values = [-objective(g) for g in grid]
    best = int(np.argmax(values))
    if best == 0 or best == len(grid) - 1:
        raise ConvergenceError("throughput maximum lies on the edge of the search range",
                               partial=values[best])
    res = optimize.minimize_scalar(
        objective,
        bounds=(grid[best - 1], grid[best + 1]),
        method="bounded",
        options={"xatol": rel_tol, "maxiter": 200},
    )
    if not res.success:
        raise ConvergenceError("throughput optimizer did not converge", partial=-res.fun)
    lam_star = math.exp(res.x)
    best_net = net.with_first_intensity(lam_star)
    result = throughput_capacity(best_net, theta, cancel=cancel, pc=pc)
    return ThroughputResult(
        result.C,
        result.per_type,
        tuple(best_net.intensities.tolist()),
        tuple(trace),
    )


@dataclass(frozen=True)
class ThroughputReference:
    """Reference values from the per-type stationarity formulas.

    ``lambda_star`` evaluates the per-type optimum with the integration variable
    set to ``theta``; ``C_star`` and ``C_star_constant`` are the closed-form
    maxima, and ``xi`` is ``int_0^inf (v^x + theta^x)^-1 (1 + v)^-1 dv``.
    """

    lambda_star: tuple[float, ...]
    C_star: float
    C_star_constant: float | None
    xi: float


def _xi(alpha: float, theta: float) -> float:
    x = 2.0 / alpha

    def integrand(w):
        v = math.exp(w)
        return v / ((v**x + theta**x) * (1.0 + v))

    edges = np.linspace(-60.0, 60.0 / x, 121)
    return sum(
        integrate.quad(integrand, lo, hi, epsabs=1e-15, epsrel=1e-12, limit=100)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    )


def throughput_reference(net: NetworkConfig, theta: float | None = None) -> ThroughputReference:
    """Closed-form throughput optimum for Rayleigh signal power (reported, not asserted)."""
    theta = net.theta if theta is None else theta
    x = 2.0 / net.alpha
    g = special.gamma(1.0 - x)
    xi = _xi(net.alpha, theta)
    means = [net.signal_mean(k) for k in range(net.K)]
    moments = [
        t.fading.moment(x) * t.power.moment(x) for t in net.types
    ]
    lam_star = tuple(
        means[k] ** x / (math.pi * g * 2.0 * theta**x * moments[k]) for k in range(net.K)
    )
    c_star = xi / (math.pi * LN2 * g) * sum(
        means[k] ** x * math.exp(-sum((means[j] / means[k]) ** x for j in range(net.K))) / moments[k]
        for k in range(net.K)
    )
    c_const = None
    if all(
        t.fading.kind == "exponential" and t.power.is_constant and t.distance.is_constant
        for t in net.types
    ):
        pref = net.alpha * math.sin(2.0 * math.pi / net.alpha) / (2.0 * LN2 * math.pi**2) * xi
        c_const = pref * sum(
            t.link_distance ** -2.0
            * math.exp(
                -sum(
                    (u.power.mean / t.power.mean) ** x * (t.link_distance / u.link_distance) ** 2
                    for u in net.types
                )
            )
            for t in net.types
        )
    return ThroughputReference(lam_star, c_star, c_const, xi)
