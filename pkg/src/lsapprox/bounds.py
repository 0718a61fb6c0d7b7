"""A-priori sup-norm error certificates for the accelerated approximant.

All bounds have the form C / t^2.  The constants are built from exact
expressions; a change of scale X -> X / a turns the unit-rate constant into
C a^2 / t^2.
"""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

from .distributions import (Compound, ErlangComponent, ErlangMixture, Exponential, Gamma,
                            GeometricExpCompound)
from .errors import DomainError, NoCertificateError

# weights of ||g''||, ||x g'''|| and ||x^2 g''''|| in the general bound
_W_G2 = 1.0 / 8.0
_W_XG3 = 1.0 / 6.0
_W_X2G4 = 9.0 / 16.0

# norm inputs for the gamma family with shape p >= 2 (unit rate)
GAMMA_NORMS = (1.0, 1.0, 2.0 + 3.0 / math.e)
# norm inputs for the unit exponential
EXPONENTIAL_NORMS = (1.0, 1.0 / math.e, 4.0 / math.e ** 2)


def _combination(norm_g2, norm_xg3, norm_x2g4, interpolated):
    c = _W_XG3 * norm_xg3 + _W_X2G4 * norm_x2g4
    if interpolated:
        c += _W_G2 * norm_g2
    return c


GAMMA_CONSTANT = _combination(*GAMMA_NORMS, True)  # 17/12 + 27/(16e)
EXPONENTIAL_CONSTANT = _combination(*EXPONENTIAL_NORMS, True)  # 1/8 + 1/(6e) + 9/(4e^2)


class CertificateSource(enum.Enum):
    """Which bound produced a certificate."""

    GENERAL_GRID = "general_grid"                    # knots only, from the three norms
    GENERAL_INTERPOLATED = "general_interpolated"    # interpolated curve, from the three norms
    EXPONENTIAL = "exponential"
    GAMMA = "gamma"
    ERLANG_MIXTURE = "erlang_mixture"
    RANDOM_SUM = "random_sum"


@dataclass(frozen=True)
class ErrorCertificate:
    """Sup-norm bound on |M^[2]_t F - F| (or on the knot error for GENERAL_GRID)."""

    bound: float
    source: CertificateSource
    t: float
    inputs: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.bound >= 0:
            raise DomainError("bound must be non-negative")

    def to_dict(self):
        return {"bound": self.bound, "source": self.source.value, "t": self.t,
                "inputs": dict(self.inputs)}

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def _check_t(t):
    if not (t > 0 and math.isfinite(t)):
        raise DomainError("t must be positive and finite")
    return float(t)


def _over_t2(constant, scale, t):
    """constant * (scale / t)^2, grouped so that scaled and rescaled-t inputs agree bitwise."""
    r = scale / t
    return constant * (r * r)


def bound_general(norm_g2, norm_xg3, norm_x2g4, t, interpolated=True):
    """Bound from the three weighted derivative norms.

    With ``interpolated`` the bound covers every x (adds ||g''|| / (8 t^2));
    otherwise it covers the knots k/t only.
    """
    t = _check_t(t)
    for name, v in (("norm_g2", norm_g2), ("norm_xg3", norm_xg3), ("norm_x2g4", norm_x2g4)):
        if not v >= 0:
            raise DomainError(f"{name} must be non-negative")
    c = _combination(norm_g2, norm_xg3, norm_x2g4, interpolated)
    source = CertificateSource.GENERAL_INTERPOLATED if interpolated else CertificateSource.GENERAL_GRID
    return ErrorCertificate(_over_t2(c, 1.0, t), source, t,
                            {"norm_g2": norm_g2, "norm_xg3": norm_xg3, "norm_x2g4": norm_x2g4,
                             "interpolated": bool(interpolated), "constant": c})


def bound_gamma(p, a, t):
    """Certificate for Gamma(rate a, shape p), available for p = 1 and p >= 2."""
    t = _check_t(t)
    if not a > 0:
        raise DomainError("rate a must be positive")
    if p == 1:
        c, source = EXPONENTIAL_CONSTANT, CertificateSource.EXPONENTIAL
    elif p >= 2:
        c, source = GAMMA_CONSTANT, CertificateSource.GAMMA
    else:
        raise NoCertificateError(f"no certificate for gamma shape p={p} (needs p = 1 or p >= 2)")
    return ErrorCertificate(_over_t2(c, a, t), source, t, {"p": p, "a": a, "constant": c})


def bound_mixture(spec, t):
    """Certificate for an Erlang mixture: C * sum_i w_i a_i^2 / t^2."""
    t = _check_t(t)
    if not isinstance(spec, ErlangMixture):
        raise DomainError("bound_mixture needs an ErlangMixture")
    weighted = math.fsum(c.w * c.a * c.a for c in spec.components)
    bound = GAMMA_CONSTANT * weighted / (t * t)
    return ErrorCertificate(bound, CertificateSource.ERLANG_MIXTURE, t,
                            {"sum_w_a2": weighted, "constant": GAMMA_CONSTANT})


def bound_compound(summand, zero_mass, t):
    """Certificate for a random sum of Erlang-mixture summands.

    ``zero_mass`` is G(0), the probability that the sum is zero; only the
    largest summand rate enters the bound.
    """
    t = _check_t(t)
    if not 0 <= zero_mass <= 1:
        raise DomainError("zero_mass must be a probability")
    mixture = as_erlang_mixture(summand)
    if not mixture.components:
        return ErrorCertificate(0.0, CertificateSource.RANDOM_SUM, t, {"a_max": 0.0, "zero_mass": zero_mass})
    a_max = max(c.a for c in mixture.components)
    bound = (1.0 - zero_mass) * _over_t2(GAMMA_CONSTANT, a_max, t)
    return ErrorCertificate(bound, CertificateSource.RANDOM_SUM, t,
                            {"a_max": a_max, "zero_mass": zero_mass, "constant": GAMMA_CONSTANT})


def as_erlang_mixture(spec):
    """View an exponential, integer-shape gamma or Erlang mixture as an Erlang mixture."""
    if isinstance(spec, ErlangMixture):
        return spec
    if isinstance(spec, Exponential):
        return ErlangMixture(0.0, (ErlangComponent(spec.rate, 1, 1.0),))
    if isinstance(spec, Gamma) and float(spec.p).is_integer():
        return ErlangMixture(0.0, (ErlangComponent(spec.a, int(spec.p), 1.0),))
    raise NoCertificateError(f"{type(spec).__name__} is not an Erlang mixture")


def certificate_for(spec, t):
    """Pick the sharpest available certificate for ``spec`` at scale t."""
    if isinstance(spec, Exponential):
        return bound_gamma(1, spec.rate, t)
    if isinstance(spec, Gamma):
        return bound_gamma(spec.p, spec.a, t)
    if isinstance(spec, ErlangMixture):
        if spec.truncated_mass > 0:
            raise NoCertificateError("truncated mixture: add truncated_mass to any certificate by hand")
        return bound_mixture(spec, t)
    if isinstance(spec, GeometricExpCompound):
        return bound_compound(spec.summand, spec.mass_at_zero, t)
    if isinstance(spec, Compound):
        return bound_compound(spec.summand, spec.mass_at_zero, t)
    raise NoCertificateError(
        f"no certificate for {type(spec).__name__}; expand phase-type laws into an Erlang mixture first")
