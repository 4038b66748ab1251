"""Independent reference computations used by the tests.

Everything here avoids the package's own numerics: arbitrary-precision mpmath
for special functions, quadrature and inverse Laplace transforms, brute-force
trapezoid refinement, and Richardson-extrapolated finite differences.
"""

from __future__ import annotations

import math

import mpmath as mp
import numpy as np

mp.mp.dps = 30


def gamma(a: float) -> float:
    return float(mp.gamma(a))


def upper_gamma(a: float, y: float) -> float:
    return float(mp.gammainc(a, y, mp.inf))


def upper_gamma_by_quadrature(a: float, y: float) -> float:
    return float(mp.quad(lambda t: t ** (a - 1) * mp.exp(-t), [y, y + 10, mp.inf]))


def ell(z: float, y: float, x: float) -> float:
    return float(z * (1 - x * mp.mpf(y) ** x * mp.gammainc(-x, y, mp.inf)))


def erf(x: float) -> float:
    return float(mp.erf(x))


def quad_inf(f, breakpoints=(0, 1, 10, 100)) -> float:
    return float(mp.quad(f, [*breakpoints, mp.inf]))


def invert_laplace(F, t: float) -> float:
    return float(mp.invertlaplace(F, t, method="dehoog"))


def trapezoid_refined(f, upper: float, panels: int) -> float:
    """Composite trapezoid on ``[0, upper]`` in the variable ``u = sqrt(v)``."""
    u = np.linspace(0.0, math.sqrt(upper), panels + 1)
    vals = f(u**2) * 2.0 * u
    return float(np.trapezoid(vals, u))


def richardson_derivative(g, v: float, order: int, h: float = 1e-2, levels: int = 6) -> float:
    """Order-``order`` derivative of ``g`` at ``v``: central differences with
    step ``h / 2**j`` combined by a Richardson table in high precision."""
    v = mp.mpf(v)

    def central(step):
        return sum(
            (-1) ** i * mp.binomial(order, i) * g(v + (order / 2 - i) * step) for i in range(order + 1)
        ) / step**order

    table = [central(mp.mpf(h) / 2**j) for j in range(levels)]
    for level in range(1, levels):
        factor = mp.mpf(4) ** level
        table = [(factor * table[j + 1] - table[j]) / (factor - 1) for j in range(len(table) - 1)]
    return float(table[0])


def mp_derivative(g, v: float, order: int) -> float:
    return float(mp.diff(g, v, order))


def weibull_success(coefficient: float, x: float, s: float) -> float:
    """``exp(-coefficient s**x)`` in high precision."""
    return float(mp.exp(-coefficient * mp.mpf(s) ** x))


def erlang_success_by_inversion(coefficient: float, x: float, shape: int, s: float) -> float:
    """``P[G > s I]`` for ``G ~ Gamma(shape, 1)``: ``sum_n s^n/n! E[I^n e^{-sI}]`` via
    mpmath derivatives of the interference transform ``exp(-c u**x)``."""
    total = mp.mpf(0)
    for n in range(shape):
        deriv = mp.diff(lambda u: mp.exp(-coefficient * u**x), s, n)
        total += (-s) ** n / mp.factorial(n) * deriv
    return float(total)


def stable_cdf_by_inversion(coefficient: float, x: float, t: float) -> float:
    return invert_laplace(lambda s: mp.exp(-coefficient * s**x) / s, t)


def expon_log1p_expectation(rho: float) -> float:
    """``E[ln(1 + rho Z)]`` for ``Z ~ Exp(1)``."""
    return float(mp.quad(lambda z: mp.log(1 + rho * z) * mp.exp(-z), [0, 1, 10, mp.inf]))


def erlang_inverse_moment(shape: int, rate: float) -> float:
    """``E[1/D]`` for ``D ~ Erlang(shape, rate)`` by direct quadrature."""
    f = lambda d: rate**shape * d ** (shape - 2) * mp.exp(-rate * d) / mp.factorial(shape - 1)
    return float(mp.quad(f, [0, 1, 10, mp.inf]))


def xi_reference(alpha: float, theta: float) -> float:
    x = 2.0 / alpha
    return float(
        mp.quad(lambda v: 1 / ((v**x + theta**x) * (1 + v)), [0, 1, 100, 1e4, mp.inf])
    )


def residual_transform_reference(lam_tilde: float, alpha: float, L: int, s: float) -> float:
    """Residual interference transform by nested mpmath quadrature over the
    L-th nearest mapped distance and the excluded disk."""
    x = 2.0 / alpha
    rate = mp.pi * lam_tilde
    base = mp.exp(-mp.pi * mp.gamma(1 - x) * lam_tilde * mp.mpf(s) ** x)

    def compensation(d):
        # pi lambda_tilde times the interference-transform mass inside the L-th distance
        inner = mp.quad(lambda u: 1 - mp.exp(-s * u ** (-alpha / 2)), [0, d])
        return mp.exp(rate * inner)

    density = lambda d: rate**L * d ** (L - 1) * mp.exp(-rate * d) / mp.factorial(L - 1)
    mean = L / rate
    knee = mp.mpf(s) ** x  # where the excluded-disk integrand changes regime
    points = sorted({mp.mpf(0), knee / 10, knee, 10 * knee, mean / 4, mean, 4 * mean, 40 * mean})
    with mp.workdps(18):
        val = mp.quad(lambda d: density(d) * compensation(d), points)
    return float(base * val)
