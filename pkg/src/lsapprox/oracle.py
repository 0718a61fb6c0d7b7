"""Independent checks for the lattice machinery.

Nothing in the approximation path calls this module.  It provides Monte Carlo
estimates of gamma-operator expectations E g(S(u)/t), deterministic
quadrature of the same expectations, and the closed form of the operator
applied to the log-type test function.

Gamma variates come from ``numpy.random.default_rng(seed).standard_gamma``
(PCG64 stream, Marsaglia-Tsang rejection with the shape < 1 boost), so a
given (seed, n) reproduces bit-for-bit.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DomainError, QuadratureError
from .special_functions import digamma

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n: int
    seed: int

    def within(self, value, n_se=4.0):
        return abs(self.mean - value) <= n_se * self.std_error


def gamma_expectation_mc(g, shape, divisor, n, seed):
    """Monte Carlo estimate of E g(S / divisor) with S ~ gamma(shape, 1)."""
    if not (shape > 0 and divisor > 0):
        raise DomainError("shape and divisor must be positive")
    if n < 2:
        raise DomainError("need at least two samples")
    rng = np.random.default_rng(seed)
    draws = rng.standard_gamma(shape, size=int(n)) / divisor
    values = np.asarray(g(draws), dtype=np.float64)
    return MCEstimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(n)), int(n), int(seed))


def lt_operator_mc(g, t, x, n, seed):
    """Monte Carlo estimate of L_t g(x) = E g(S(tx) / t)."""
    if not (t > 0 and x > 0):
        raise DomainError("t and x must be positive")
    return gamma_expectation_mc(g, t * x, t, n, seed)


def lt_star_mc(g, t, x, n, seed):
    """Monte Carlo estimate of the lattice CDF operator, E g(S(floor(tx) + 1) / t)."""
    if not (t > 0 and x >= 0):
        raise DomainError("t must be positive and x non-negative")
    return gamma_expectation_mc(g, math.floor(t * x) + 1, t, n, seed)


def lt_phi_closed(t, x):
    """Closed form of E phi(S(tx)/t) for phi(x) = (x^2/2)(3/2 - log x)."""
    if not (t > 0 and x > 0):
        raise DomainError("t and x must be positive")
    s = t * x
    inner = 1.5 * s * s - 0.5 * s - 1.0 + s * (s + 1.0) * (math.log(t) - digamma(s))
    return inner / (2.0 * t * t)


def expectation_quadrature(g, shape, scale_divisor, tol=QUAD_TOL):
    """E g(S / scale_divisor) for S ~ gamma(shape, 1) by adaptive quadrature.

    The half line is split at the gamma mean and each piece is integrated with
    QUADPACK (Gauss-Kronrod on the finite part, a mapped rule on the tail).
    """
    if not (shape > 0 and scale_divisor > 0):
        raise DomainError("shape and divisor must be positive")
    log_norm = math.lgamma(shape)

    def integrand(u):
        if u <= 0.0:
            return 0.0
        dens = math.exp((shape - 1.0) * math.log(u) - u - log_norm)
        return float(g(u / scale_divisor)) * dens

    split = max(shape, 1.0)
    total, err = 0.0, 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            for lo, hi in ((0.0, split), (split, math.inf)):
                val, e = integrate.quad(integrand, lo, hi, epsabs=tol / 2, epsrel=1e-13, limit=500)
                total += val
                err += e
        except integrate.IntegrationWarning as exc:
            raise QuadratureError(f"quadrature did not converge: {exc}") from exc
        except OverflowError as exc:
            raise QuadratureError(f"integrand overflowed: {exc}") from exc
    if not math.isfinite(total):
        raise QuadratureError("quadrature returned a non-finite value")
    if err > tol * max(1.0, abs(total)):
        raise QuadratureError(f"quadrature error estimate {err:.2e} above {tol:g}")
    return total
