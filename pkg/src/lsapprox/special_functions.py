"""Gamma-family special functions, the log-type test function and the shape envelopes."""
import enum
import math

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

EULER_GAMMA = 0.57721566490153286061

# Bernoulli coefficients B_2n / (2n) for the digamma asymptotic series, n = 1..7
_PSI_SERIES = (1.0 / 12, -1.0 / 120, 1.0 / 252, -1.0 / 240, 1.0 / 132, -691.0 / 32760, 1.0 / 12)
_PSI_SHIFT = 10.0


def _as_positive(x, name):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr > 0)):
        raise DomainError(f"{name} requires x > 0")
    return arr


def log_gamma(x):
    """Natural log of the gamma function for x > 0 (scalar or array)."""
    arr = _as_positive(x, "log_gamma")
    if arr.ndim == 0:
        return math.lgamma(float(arr))
    return gammaln(arr)


def digamma(x):
    """Digamma function for x > 0.

    The argument is shifted above 10 with psi(x) = psi(x + 1) - 1/x and the
    asymptotic expansion is summed through the x**-14 term.
    """
    arr = _as_positive(x, "digamma")
    y = np.array(arr, dtype=np.float64, copy=True, ndmin=1)
    acc = np.zeros_like(y)
    low = y < _PSI_SHIFT
    while np.any(low):
        acc[low] -= 1.0 / y[low]
        y[low] += 1.0
        low = y < _PSI_SHIFT
    inv2 = 1.0 / (y * y)
    series = np.zeros_like(y)
    for coef in reversed(_PSI_SERIES):
        series = inv2 * (coef + series)
    out = acc + np.log(y) - 0.5 / y - series
    if arr.ndim == 0:
        return float(out[0])
    return out


def test_phi(x, order=0):
    """The test function phi(x) = (x**2 / 2)(3/2 - log x) and its derivatives up to order 4."""
    if order not in (0, 1, 2, 3, 4):
        raise DomainError("order must be an integer in 0..4")
    arr = np.asarray(x, dtype=np.float64)
    if order == 0:
        if np.any(arr < 0):
            raise DomainError("phi is defined for x >= 0")
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(arr > 0, 0.5 * arr * arr * (1.5 - np.log(np.where(arr > 0, arr, 1.0))), 0.0)
    else:
        if np.any(~(arr > 0)):
            raise DomainError("derivatives of phi need x > 0")
        if order == 1:
            out = arr * (1.0 - np.log(arr))
        elif order == 2:
            out = -np.log(arr)
        elif order == 3:
            out = -1.0 / arr
        else:
            out = 1.0 / (arr * arr)
    return float(out) if np.ndim(out) == 0 else out


class EnvelopeId(enum.Enum):
    """Shape envelopes bounding weighted derivatives of the unit-rate gamma density."""

    G1 = 1  # sup f_p
    G2 = 2  # sup |x f_p'|
    G3 = 3  # sup |f_p'|
    G4 = 4  # sup of the cubic part of x^2 f_p'''


_ENVELOPE_MIN = {EnvelopeId.G1: 1.0, EnvelopeId.G2: 1.0, EnvelopeId.G3: 2.0, EnvelopeId.G4: 2.0}


def envelope(which, p):
    """Evaluate envelope ``which`` at shape ``p`` (computed in log space)."""
    which = EnvelopeId(which)
    p = float(p)
    lo = _ENVELOPE_MIN[which]
    if not p >= lo or math.isinf(p):
        raise DomainError(f"{which.name} is defined for p >= {lo:g}")
    if which is EnvelopeId.G1:
        if p == 1.0:
            return 1.0
        q = p - 1.0
        log_val = -q + q * math.log(q)
    elif which is EnvelopeId.G2:
        m = p - 0.5 + 0.5 * math.sqrt(4.0 * p - 3.0)
        log_val = (p - 0.5) * math.log(m) - m
    elif which is EnvelopeId.G3:
        if p == 2.0:
            return 1.0
        s = math.sqrt(p - 1.0)
        log_val = -(p - 1.0 - s) + (p - 2.0) * math.log(s - 1.0) + (p - 1.0) * math.log(s)
    else:
        if p == 2.0:
            return 1.0
        u = math.sqrt(3.0 * p - 2.0)
        log_val = -(p - u) + (p - 2.0) * math.log(p - u) + 3.0 * math.log(u - 1.0)
    return math.exp(log_val - math.lgamma(p))


def gamma_density(p, x):
    """Unit-rate gamma density exp(-x) x**(p-1) / Gamma(p) for x > 0."""
    return gamma_density_derivative(p, 0, x)


def gamma_density_derivative(p, n, x):
    """n-th derivative of the unit-rate gamma density, via the finite binomial sum.

    d^n/dx^n f_p(x) = exp(-x) x**(p-n-1) / Gamma(p) *
                      sum_i C(n, i) (-1)**i prod_{j=1}^{n-i} (p - j) x**i
    """
    if p <= 0:
        raise DomainError("shape must be positive")
    arr = _as_positive(x, "gamma_density_derivative")
    poly = np.zeros_like(arr, dtype=np.float64)
    for i in range(n + 1):
        falling = 1.0
        for j in range(1, n - i + 1):
            falling *= p - j
        poly = poly + math.comb(n, i) * (-1.0) ** i * falling * arr ** i
    pref = np.exp(-arr + (p - n - 1.0) * np.log(arr) - math.lgamma(p))
    out = pref * poly
    return float(out) if np.ndim(out) == 0 else out
