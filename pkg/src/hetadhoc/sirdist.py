"""Distribution of the signal-to-interference ratio.

Interference from the whole marked network is a stable variable whose Laplace
transform is ``exp(-A s**x)`` with ``x = 2/alpha`` and
``A = pi Gamma(1 - x) lambda_tilde``. Removing the ``L`` strongest terms leaves
the points of the equivalent unit-mark process beyond squared distance
``D_L ~ Erlang(L, pi lambda_tilde)``; conditioned on ``D_L = D`` the residual
interference has log-transform ``-pi lambda_tilde D phi(s D**(-alpha/2))``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from . import numerics
from .errors import CapabilityError, DivergenceError, QualityWarning
from .model import NetworkConfig, SignalLaw, derive_intensities, signal_law

__all__ = [
    "CancellationSpec",
    "CdfMethod",
    "SirCdfResult",
    "TruncatedBound",
    "interference_coefficient",
    "laplace_interference",
    "interference_cdf",
    "laplace_residual_interference",
    "laplace_residual_upper_bound",
    "sir_cdf",
    "sir_cdf_cancel",
    "sir_cdf_bounds",
    "sir_cdf_taylor",
    "sir_cdf_cancel_lower_bound_alpha4",
    "sir_fractional_moment",
    "sir_fractional_moment_cancel",
    "erlang_success_closed_form",
]


@dataclass(frozen=True)
class CancellationSpec:
    """Successive cancellation of the ``L`` strongest interferers.

    ``omega`` calibrates the moment-generating-function bound and
    ``d_min_quantile`` is the lower truncation used to keep that bound finite.
    """

    L: int
    omega: float = 0.5
    erlang_quadrature_nodes: int = 256
    d_min_quantile: float = 0.01

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError("L must be a positive integer")
        if not 0.0 < self.omega < 1.0:
            raise ValueError("omega must lie in (0, 1)")
        if self.erlang_quadrature_nodes < 8:
            raise ValueError("at least 8 quadrature nodes are required")
        if not 0.0 < self.d_min_quantile < 0.1:
            raise ValueError("d_min_quantile must lie in (0, 0.1)")


class CdfMethod(str, enum.Enum):
    CLOSED_FORM = "closed_form"
    INVERSE_LAPLACE = "inverse_laplace"
    ERF_ALPHA4 = "erf_alpha4"
    TAYLOR_APPROX = "taylor_approx"
    BOUND_LOWER = "bound_lower"
    BOUND_UPPER = "bound_upper"


@dataclass(frozen=True)
class SirCdfResult:
    value: float
    method: CdfMethod
    diagnostics: dict = field(default_factory=dict)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class TruncatedBound:
    """A bound evaluated with lower truncation of ``D_L`` at ``d_min``.

    ``sensitive`` is set when halving the truncation quantile moves the value
    by more than 1 %.
    """

    value: float
    sensitive: bool
    d_min: float

    def __float__(self) -> float:
        return self.value


def _clip01(v: float) -> float:
    return float(min(1.0, max(0.0, v)))


# ---------------------------------------------------------------------------
# Interference transforms
# ---------------------------------------------------------------------------


def interference_coefficient(net: NetworkConfig, lambda_tilde: float | None = None) -> float:
    """``A = pi Gamma(1 - 2/alpha) lambda_tilde``."""
    x = 2.0 / net.alpha
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    return math.pi * special.gamma(1.0 - x) * lt


def laplace_interference(net: NetworkConfig, s, lambda_tilde: float | None = None):
    """``E[exp(-s I)] = exp(-A s**x)``; accepts complex arrays."""
    x = 2.0 / net.alpha
    a = interference_coefficient(net, lambda_tilde)
    s = np.asarray(s)
    out = np.exp(-a * s**x)
    return float(out) if out.ndim == 0 and not np.iscomplexobj(out) else out


def interference_cdf(
    coefficient: float, x: float, t, node_count: int = 32, closed_form: bool = True
) -> np.ndarray:
    """CDF at ``t`` of the stable variable with transform ``exp(-coefficient s**x)``.

    ``x = 1/2`` has the closed form ``erfc(coefficient / (2 sqrt(t)))``; set
    ``closed_form=False`` to force numerical inversion.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    pos = t > 0
    if not pos.any():
        return out
    if x == 0.5 and closed_form:
        out[pos] = special.erfc(coefficient / (2.0 * np.sqrt(t[pos])))
    else:
        if x <= 0.5:
            vals = numerics.talbot_inverse(
                lambda s: -coefficient * s**x - np.log(s), t[pos], node_count, log_transform=True
            )
        else:
            # For x > 1/2, Re(s**x) turns negative on the far Talbot contour and
            # the transform outgrows exp(s t); the vertical Euler contour avoids that.
            with np.errstate(over="ignore", invalid="ignore", under="ignore"):
                vals = numerics.euler_inverse(
                    lambda s: np.exp(-coefficient * s**x) / s, t[pos], node_count
                )
        out[pos] = vals
    return np.clip(out, 0.0, 1.0)


@lru_cache(maxsize=64)
def _erlang_nodes(shape: int, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for ``E[g(T)]``, ``T ~ Gamma(shape, 1)``.

    Composite Gauss-Legendre in ``log t`` with 8 points per panel. The
    compensation factor switches on near ``t ~ pi lt s**x``, often far below
    the Erlang scale, where a single Laguerre rule cannot resolve it.
    """
    per_panel = min(8, count)
    panels = max(1, count // per_panel)
    lo = math.log(1e-14) / shape
    hi = math.log(special.gammaincinv(shape, 1.0 - 1e-16))
    edges = np.linspace(lo, hi, panels + 1)
    g, gw = np.polynomial.legendre.leggauss(per_panel)
    mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
    u = (mid[:, None] + half[:, None] * g).ravel()
    t = np.exp(u)
    w = (half[:, None] * gw).ravel() * np.exp(shape * u - t - special.gammaln(shape))
    return t, w


def _residual_phi(y: np.ndarray, x: float) -> np.ndarray:
    """``phi(y) = int_1^inf (1 - exp(-y v**(-1/x))) dv`` for complex ``y``."""
    y = np.asarray(y, dtype=complex)
    out = np.empty_like(y)
    small = np.abs(y) <= 2.0
    if small.any():
        ys = y[small]
        term = np.ones_like(ys)
        total = np.zeros_like(ys)
        for n in range(1, 40):
            term = term * (-ys) / n
            total = total - term * (x / (n - x))
        out[small] = total
    big = ~small
    if big.any():
        yb = y[big]
        lower = special.gamma(1.0 - x) - numerics.upper_incomplete_gamma_complex(1.0 - x, yb)
        out[big] = yb**x * lower - 1.0 + np.exp(-yb)
    return out


def _log_compensation(net, cancel, s: float, lambda_tilde: float) -> tuple[np.ndarray, np.ndarray]:
    """Per-node ``pi lambda_tilde ell(D, s D**(-alpha/2))`` and weights."""
    x = 2.0 / net.alpha
    t, w = _erlang_nodes(cancel.L, cancel.erlang_quadrature_nodes)
    d = t / (math.pi * lambda_tilde)
    if s == 0:
        return np.zeros_like(d), w
    comp = math.pi * lambda_tilde * numerics.ell(d, s * d ** (-net.alpha / 2.0), x)
    return comp, w


def laplace_residual_interference(
    net: NetworkConfig,
    cancel: CancellationSpec,
    s: float,
    *,
    compensation: bool = True,
    lambda_tilde: float | None = None,
) -> float:
    """Transform of the interference left after cancelling the ``L`` strongest terms.

    ``compensation=False`` drops the cancellation factor and returns the plain
    interference transform.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    base = -interference_coefficient(net, lt) * s ** (2.0 / net.alpha)
    if not compensation or s == 0:
        return math.exp(base)
    comp, w = _log_compensation(net, cancel, s, lt)
    return float(np.dot(w, np.exp(base + comp)))


def _guarded_mgf_log(
    net: NetworkConfig, s: float, omega: float, shape: int, lambda_tilde: float, d_min: float
) -> float:
    """``log E[exp(pi lt max(ell(D, y), s omega**(-a/2) max(D, d_min)**(1-a/2)))]``.

    ``D ~ Erlang(shape, pi lt)`` and ``y = s D**(-alpha/2)``. Taking the
    maximum with the exact exponent uses a per-sample ``omega`` wherever the
    fixed one would undershoot, so the result dominates the exact transform.
    """
    x = 2.0 / net.alpha
    rate = math.pi * lambda_tilde
    c = rate * s * omega ** (-net.alpha / 2.0)
    beta = net.alpha / 2.0 - 1.0
    top = c * d_min ** (-beta)
    log_norm = shape * math.log(rate) - special.gammaln(shape)

    def integrand(d):
        if d <= 0.0:
            return 0.0
        exact = rate * numerics.ell(d, s * d ** (-net.alpha / 2.0), x)
        clamped = c * max(d, d_min) ** (-beta)
        return math.exp(
            max(exact, clamped) - top + log_norm + (shape - 1) * math.log(d) - rate * d
        )

    upper = special.gammaincinv(shape, 1.0 - 1e-15) / rate
    edges = [0.0, *np.geomspace(d_min * 1e-6, max(upper, 2 * d_min), 24)]
    if d_min not in edges:
        edges = sorted([*edges, d_min])
    total = sum(
        integrate.quad(integrand, lo, hi, epsabs=1e-14, epsrel=1e-10, limit=200)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    )
    return top + math.log(total)


def laplace_residual_upper_bound(
    net: NetworkConfig,
    cancel: CancellationSpec,
    s: float,
    lambda_tilde: float | None = None,
    *,
    check_sensitivity: bool = True,
) -> TruncatedBound:
    """``L_I(s) E[exp(pi lambda_tilde s omega**(-alpha/2) D**(1-alpha/2))]``.

    The expectation diverges at ``D -> 0``, so ``D`` is clamped from below at
    the ``d_min_quantile`` quantile of its Erlang law. Where the fixed
    ``omega`` would put the exponent below the exact one (large ``D``), the
    exact exponent is used, which keeps the result an upper bound.
    The value may be ``inf`` when the truncated expectation overflows.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    rate = math.pi * lt
    d_min = float(special.gammaincinv(cancel.L, cancel.d_min_quantile) / rate)
    if s == 0:
        return TruncatedBound(1.0, False, d_min)
    base = -interference_coefficient(net, lt) * s ** (2.0 / net.alpha)
    log_val = base + _guarded_mgf_log(net, s, cancel.omega, cancel.L, lt, d_min)
    sensitive = False
    if check_sensitivity:
        d_half = special.gammaincinv(cancel.L, cancel.d_min_quantile / 2.0) / rate
        log_half = base + _guarded_mgf_log(net, s, cancel.omega, cancel.L, lt, d_half)
        sensitive = (log_half - log_val) > math.log1p(0.01)
    value = math.exp(log_val) if log_val < 700.0 else math.inf
    return TruncatedBound(value, bool(sensitive), d_min)


# ---------------------------------------------------------------------------
# Closed forms for Erlang-distributed normalized signal power
# ---------------------------------------------------------------------------


def erlang_success_closed_form(coefficient: float, x: float, shape: int, s: float) -> float:
    """``P[G > s I]`` for ``G ~ Gamma(shape, 1)`` and ``I`` with transform ``exp(-coefficient u**x)``.

    Evaluated as ``(1/(m-1)!) d^{m-1}/dv^{m-1} [v^{m-1} exp(-c v**(-x))]`` at
    ``v = 1``, with ``c = coefficient * s**x``, using the exact derivative engine.
    """
    if shape > numerics.MAX_DERIVATIVE_ORDER + 1:
        raise CapabilityError(f"Erlang shape {shape} exceeds the supported maximum")
    c = coefficient * s**x
    expr = [numerics.ExpPolyTerm(1.0, float(shape - 1), c, -x)]
    deriv = numerics.exppoly_derivative(expr, shape - 1)
    return float(numerics.exppoly_evaluate(deriv, 1.0)) / math.factorial(shape - 1)


def _series_from_log_derivatives(log_derivs: np.ndarray) -> np.ndarray:
    """Derivatives ``y^(n)/y`` of ``y = exp(Lambda)`` from those of ``Lambda``.

    ``log_derivs[j]`` holds ``Lambda^(j+1)``; arrays broadcast over trailing axes.
    """
    order = log_derivs.shape[0]
    ratios = [np.ones_like(log_derivs[0])]
    for n in range(1, order + 1):
        acc = np.zeros_like(log_derivs[0])
        for j in range(n):
            acc = acc + math.comb(n - 1, j) * log_derivs[j] * ratios[n - 1 - j]
        ratios.append(acc)
    return np.array(ratios)


def _erlang_cancel_success(
    net: NetworkConfig, cancel: CancellationSpec, shape: int, s: float, lambda_tilde: float
) -> float:
    """``sum_{n<m} (-s)^n/n! E_D[d^n/ds^n L_{I|D}(s)]``."""
    x = 2.0 / net.alpha
    a = interference_coefficient(net, lambda_tilde)
    t, w = _erlang_nodes(cancel.L, cancel.erlang_quadrature_nodes)
    d = t / (math.pi * lambda_tilde)
    y = s * d ** (-net.alpha / 2.0)
    log_y = -a * s**x + math.pi * lambda_tilde * numerics.ell(d, y, x)
    if shape == 1:
        return float(np.dot(w, np.exp(log_y)))
    log_derivs = np.array(
        [
            (-1.0) ** n * math.pi * lambda_tilde * x * s ** (x - n)
            * special.gammainc(n - x, y) * special.gamma(n - x)
            for n in range(1, shape)
        ]
    )
    ratios = _series_from_log_derivatives(log_derivs)
    total = np.zeros_like(d)
    for n in range(shape):
        total = total + (-s) ** n / math.factorial(n) * ratios[n]
    return float(np.dot(w, np.exp(log_y) * total))


# ---------------------------------------------------------------------------
# SIR CDF without cancellation
# ---------------------------------------------------------------------------


def _law(net: NetworkConfig, k: int, law: SignalLaw | None) -> SignalLaw:
    return signal_law(net, k) if law is None else law


def sir_cdf(
    net: NetworkConfig,
    theta: float | None = None,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
    settings: numerics.InverseLaplaceSettings | None = None,
) -> SirCdfResult:
    """CDF of the type-``k`` SIR at ``theta``.

    ``law`` overrides the received signal power (power control, SIMO) and
    ``lambda_tilde`` the effective interferer intensity.
    """
    theta = net.theta if theta is None else theta
    if not theta > 0:
        raise ValueError("theta must be positive")
    law = _law(net, k, law)
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    x = 2.0 / net.alpha
    a = interference_coefficient(net, lt)
    shape = law.erlang_shape
    if shape is not None:
        mean = law.mean
        p = erlang_success_closed_form(a, x, shape, shape * theta / mean)
        return SirCdfResult(_clip01(1.0 - p), CdfMethod.CLOSED_FORM, {"erlang_shape": shape})
    if net.alpha == 4.0:
        scale = a * math.sqrt(theta) / 2.0
        if law.is_constant:
            value = special.erf(scale / math.sqrt(law.constant))
        else:
            value = law.expect(lambda sv: special.erf(scale / math.sqrt(sv)))
        return SirCdfResult(_clip01(value), CdfMethod.ERF_ALPHA4)
    node_count = settings.node_count if settings else 32
    if law.is_constant:
        value = 1.0 - interference_cdf(a, x, law.constant / theta, node_count)[0]
    else:
        value = 1.0 - law.expect(lambda sv: interference_cdf(a, x, sv / theta, node_count)[0])
    return SirCdfResult(_clip01(value), CdfMethod.INVERSE_LAPLACE, {"nodes": node_count})


def sir_cdf_inverse_laplace(
    net: NetworkConfig,
    theta: float,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
    node_count: int = 32,
) -> float:
    """The general inverse-transform route, bypassing every closed form.

    For an Erlang law the transform of ``SIR^{-1}`` is inverted directly:
    ``(1/s) (1 - E[exp(-A (s / S)**x)])`` with the expectation over ``S``.
    """
    law = _law(net, k, law)
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    x = 2.0 / net.alpha
    a = interference_coefficient(net, lt)

    def invert(t: float) -> float:
        return float(interference_cdf(a, x, t, node_count, closed_form=False)[0])

    if law.is_constant:
        return 1.0 - invert(law.constant / theta)
    return 1.0 - law.expect(lambda sv: invert(sv / theta))


def sir_cdf_bounds(
    net: NetworkConfig,
    theta: float | None = None,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
) -> tuple[float, float]:
    """``(lower, upper)`` bounds on the SIR CDF.

    Upper: ``min(1, pi lambda_tilde E[S**-x] theta**x)``, or the Jensen erf
    bound at ``alpha = 4``. Lower: inversion of
    ``A / (s**(1-x) (A s**x + E[S**x]))``, closed form at ``alpha = 4``.
    """
    theta = net.theta if theta is None else theta
    law = _law(net, k, law)
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    x = 2.0 / net.alpha
    a = interference_coefficient(net, lt)
    neg_moment = law.moment(-x)  # raises DivergenceError when infinite
    pos_moment = law.moment(x)
    if net.alpha == 4.0:
        upper = float(special.erf(a * math.sqrt(theta) * neg_moment / 2.0))
        z = pos_moment / (a * math.sqrt(theta))
        lower = float(special.erfcx(z))
    else:
        if net.alpha < 4.0:
            # 1/Gamma(1 - 2x) < 0 here, so the second-order term is positive
            # and the first-order "upper" value undershoots for small lt.
            warnings.warn(
                "for alpha < 4 the first-order upper value is not a guaranteed bound",
                QualityWarning,
                stacklevel=2,
            )
        upper = min(1.0, math.pi * lt * neg_moment * theta**x)
        lower = float(
            numerics.talbot_inverse(
                lambda s: a / (s ** (1.0 - x) * (a * s**x + pos_moment)), 1.0 / theta
            )[0]
        )
    return _clip01(lower), _clip01(upper)


def sir_cdf_taylor(
    net: NetworkConfig,
    theta: float | None = None,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
) -> float:
    """Small-interference expansion of the SIR CDF, keeping ``floor(alpha/2)`` terms.

    Emits :class:`QualityWarning` when the leading term exceeds 0.1.
    """
    theta = net.theta if theta is None else theta
    law = _law(net, k, law)
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    x = 2.0 / net.alpha
    base = special.gamma(1.0 - x) * math.pi * theta**x * lt
    total = 0.0
    for n in range(1, int(math.floor(net.alpha / 2.0)) + 1):
        coeff = (-1.0) ** (n + 1) * special.rgamma(1.0 - n * x)
        if coeff == 0.0:
            continue
        term = coeff * base**n * law.moment(-n * x)
        if n == 1 and term > 0.1:
            warnings.warn(
                f"leading expansion term {term:.3g} is not small; approximation is unreliable",
                QualityWarning,
                stacklevel=2,
            )
        total += term
    return total


# ---------------------------------------------------------------------------
# SIR CDF with cancellation
# ---------------------------------------------------------------------------


def _conditional_cdf_cancel(
    net: NetworkConfig, cancel: CancellationSpec, lambda_tilde: float, t: float, node_count: int
) -> float:
    """``P[I_L <= t]`` by Euler inversion of the conditional transform, averaged over ``D_L``."""
    x = 2.0 / net.alpha
    nodes, w = _erlang_nodes(cancel.L, cancel.erlang_quadrature_nodes)
    d = nodes / (math.pi * lambda_tilde)
    rate = math.pi * lambda_tilde

    def transform(s):
        s = np.asarray(s, dtype=complex)
        y = s[..., None] * d ** (-net.alpha / 2.0)
        log_cond = -rate * d * _residual_phi(y, x)
        return (np.exp(log_cond) @ w) / s

    return float(np.clip(numerics.euler_inverse(transform, t, node_count)[0], 0.0, 1.0))


def sir_cdf_cancel(
    net: NetworkConfig,
    cancel: CancellationSpec,
    theta: float | None = None,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
    compensation: bool = True,
    node_count: int = 32,
    method: str = "auto",
) -> SirCdfResult:
    """CDF of the SIR after cancelling the ``L`` strongest interferers.

    Erlang signal laws use the exact derivative recurrence averaged over
    ``D_L``; other laws use Euler inversion of the conditional transform with
    the expectation over ``S`` outside. ``compensation=False`` reproduces
    :func:`sir_cdf`. ``method="inverse_laplace"`` skips the Erlang recurrence.
    """
    theta = net.theta if theta is None else theta
    if not compensation:
        return sir_cdf(net, theta, k, law=law, lambda_tilde=lambda_tilde)
    law = _law(net, k, law)
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    shape = law.erlang_shape if method == "auto" else None
    if method not in ("auto", "inverse_laplace"):
        raise ValueError(f"unknown method {method!r}")
    if shape is not None:
        if shape > numerics.MAX_DERIVATIVE_ORDER + 1:
            raise CapabilityError(f"Erlang shape {shape} exceeds the supported maximum")
        p = _erlang_cancel_success(net, cancel, shape, shape * theta / law.mean, lt)
        return SirCdfResult(_clip01(1.0 - p), CdfMethod.CLOSED_FORM, {"erlang_shape": shape})
    if law.is_constant:
        value = 1.0 - _conditional_cdf_cancel(net, cancel, lt, law.constant / theta, node_count)
    else:
        value = 1.0 - law.expect(
            lambda sv: _conditional_cdf_cancel(net, cancel, lt, sv / theta, node_count)
        )
    return SirCdfResult(_clip01(value), CdfMethod.INVERSE_LAPLACE, {"nodes": node_count})


def sir_cdf_cancel_lower_bound_alpha4(
    net: NetworkConfig,
    cancel: CancellationSpec,
    theta: float | None = None,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
) -> float:
    """First-order lower bound on the cancelled SIR CDF for ``alpha = 4``.

    ``E[erf(z)] - E[(pi lt)^2 theta^1.5 / (2 S^1.5) exp(-z^2)] E[1/(omega^2 D_L)]``
    with ``z = pi^1.5 lt sqrt(theta) / (2 sqrt(S))``. Needs ``L >= 2``
    because ``E[1/D_1]`` is infinite.
    """
    theta = net.theta if theta is None else theta
    if net.alpha != 4.0:
        raise CapabilityError("this bound is only available for alpha = 4")
    if cancel.L < 2:
        raise CapabilityError(
            "E[1/D_L] is infinite for L = 1; use sir_cdf_cancel for the exact value"
        )
    law = _law(net, k, law)
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    scale = math.pi**1.5 * lt * math.sqrt(theta) / 2.0

    def erf_term(sv):
        return special.erf(scale / math.sqrt(sv))

    def correction(sv):
        return (math.pi * lt) ** 2 * theta**1.5 / (2.0 * sv**1.5) * math.exp(-scale**2 / sv)

    if law.is_constant:
        first, second = erf_term(law.constant), correction(law.constant)
    else:
        first, second = law.expect(erf_term), law.expect(correction)
    inv_d = math.pi * lt / (cancel.L - 1)
    return float(first - second * inv_d / cancel.omega**2)


# ---------------------------------------------------------------------------
# Fractional moments
# ---------------------------------------------------------------------------


def sir_fractional_moment(
    net: NetworkConfig,
    delta: float,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
    method: str = "closed_form",
) -> float:
    """``E[SIR**delta]``.

    ``closed_form`` evaluates ``Gamma(1 + delta alpha/2) E[S]**delta / A**(delta alpha/2)``,
    which is exact for exponentially distributed normalized signal power.
    ``general`` evaluates ``E[S**delta] E[I**-delta]`` and holds for every law.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    law = _law(net, k, law)
    a = interference_coefficient(net, lambda_tilde)
    exponent = delta * net.alpha / 2.0
    if method == "closed_form":
        return math.exp(special.gammaln(1.0 + exponent) - exponent * math.log(a)) * law.mean**delta
    if method == "general":
        return (
            law.moment(delta)
            * math.exp(special.gammaln(1.0 + exponent) - special.gammaln(1.0 + delta))
            / a**exponent
        )
    raise ValueError(f"unknown method {method!r}")


def sir_fractional_moment_cancel(
    net: NetworkConfig,
    cancel: CancellationSpec,
    delta: float,
    k: int = 0,
    *,
    law: SignalLaw | None = None,
    lambda_tilde: float | None = None,
    compensation: bool = True,
    method: str = "closed_form",
) -> float:
    """``E[SIR_L**delta]`` as ``int_0^inf L_{I,L}(t**(1/delta) / E[S]) dt``.

    ``method="general"`` uses ``E[S**delta] / Gamma(delta) int u**(delta-1) L_{I,L}(u) du``
    which does not assume exponential normalized signal power.
    """
    if not delta > 0:
        raise ValueError("delta must be positive")
    law = _law(net, k, law)
    lt = derive_intensities(net).lambda_tilde if lambda_tilde is None else lambda_tilde
    a = interference_coefficient(net, lt)
    x = 2.0 / net.alpha
    u_scale = a ** (-1.0 / x)  # scale on which the plain transform decays

    def transform(u):
        return laplace_residual_interference(
            net, cancel, u, compensation=compensation, lambda_tilde=lt
        )

    # integrate in log u: int u**(delta-1) L(u) du = int exp(delta w) L(e^w) dw
    def integrand(w):
        u = u_scale * math.exp(w)
        return math.exp(delta * w) * transform(u)

    lo = -60.0 / delta
    hi = 4.0 * math.log(10.0) / x + 10.0
    edges = np.linspace(lo, hi, 25)
    total = sum(
        integrate.quad(integrand, a0, b0, epsabs=0.0, epsrel=1e-10, limit=200)[0]
        for a0, b0 in zip(edges[:-1], edges[1:])
    )
    mellin = total * u_scale**delta  # int u**(delta-1) L(u) du
    if method == "closed_form":
        return delta * law.mean**delta * mellin
    if method == "general":
        return law.moment(delta) * mellin / special.gamma(delta)
    raise ValueError(f"unknown method {method!r}")
