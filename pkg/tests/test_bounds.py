import json
import math

import numpy as np
import pytest
import sympy as sp

from lsapprox.bounds import (EXPONENTIAL_CONSTANT, EXPONENTIAL_NORMS, GAMMA_CONSTANT, GAMMA_NORMS,
                             CertificateSource, ErrorCertificate, as_erlang_mixture, bound_compound,
                             bound_gamma, bound_general, bound_mixture, certificate_for)
from lsapprox.distributions import (Compound, ErlangMixture, Exponential, Gamma, Geometric,
                                    GeometricExpCompound, PhaseType, Poisson)
from lsapprox.errors import DomainError, NoCertificateError
from lsapprox.phase_type import PhaseTypeRep


def test_gamma_constant():
    assert GAMMA_CONSTANT == pytest.approx(17 / 12 + 27 / (16 * math.e), rel=1e-15)
    assert abs(GAMMA_CONSTANT - 2.0375) <= 5e-5
    assert bound_general(1, 1, 2 + 3 / math.e, 1).bound == GAMMA_CONSTANT


def test_exponential_constant():
    expected = 1 / 8 + 1 / (6 * math.e) + 9 / (4 * math.e ** 2)
    assert EXPONENTIAL_CONSTANT == pytest.approx(expected, rel=1e-15)
    assert bound_general(1, 1 / math.e, 4 / math.e ** 2, 1).bound == pytest.approx(expected, rel=1e-15)


def test_zero_norms():
    assert bound_general(0, 0, 0, 3.7).bound == 0.0


def test_grid_bound_drops_interpolation_term():
    full = bound_general(2, 1, 1, 1)
    grid = bound_general(2, 1, 1, 1, interpolated=False)
    assert full.bound - grid.bound == pytest.approx(2 / 8, abs=1e-15)
    assert grid.source is CertificateSource.GENERAL_GRID
    assert full.source is CertificateSource.GENERAL_INTERPOLATED


@pytest.mark.parametrize("t", [0.3, 1, 5, 17.5, 1000])
def test_exact_inverse_square_scaling(t):
    assert bound_general(*GAMMA_NORMS, 2 * t).bound == bound_general(*GAMMA_NORMS, t).bound / 4
    assert bound_gamma(2, 1, 2 * t).bound == bound_gamma(2, 1, t).bound / 4


@pytest.mark.parametrize("p, a, t, expected, tol", [
    (2, 1, 5, 0.0815, 5e-5),
    (3, 2, 5, 0.326, 5e-4),
    (1, 1, 10, EXPONENTIAL_CONSTANT / 100, 1e-17),
])
def test_gamma_examples(p, a, t, expected, tol):
    assert abs(bound_gamma(p, a, t).bound - expected) <= tol


def test_gamma_sources():
    assert bound_gamma(1, 1, 5).source is CertificateSource.EXPONENTIAL
    assert bound_gamma(2.5, 1, 5).source is CertificateSource.GAMMA


@pytest.mark.parametrize("p", [0.5, 1.5, 1.999])
def test_gamma_without_certificate(p):
    with pytest.raises(NoCertificateError):
        bound_gamma(p, 1, 5)


@pytest.mark.parametrize("a", [0.5, 2.0, 4.0])
@pytest.mark.parametrize("t", [1.0, 5.0, 12.0])
def test_scale_transfer_bit_identical(a, t):
    assert bound_gamma(3, a, t).bound == bound_gamma(3, 1, t / a).bound


def test_mixture_examples():
    single = ErlangMixture(0.0, ((1.0, 1, 1.0),))
    assert bound_mixture(single, 5).bound == pytest.approx(GAMMA_CONSTANT / 25, rel=1e-15)
    assert bound_mixture(ErlangMixture(1.0, ()), 5).bound == 0.0
    two = ErlangMixture(0.0, ((1.0, 1, 0.5), (2.0, 1, 0.5)))
    assert abs(bound_mixture(two, 10).bound - 0.05094) <= 5e-6


def test_compound_examples():
    summand = ErlangMixture(0.0, ((1.0, 1, 1.0),))
    assert bound_compound(summand, 1.0, 5).bound == 0.0
    got = bound_compound(summand, 0.1, 5).bound
    assert abs(got - 0.07335) <= 5e-6
    doubled = bound_compound(ErlangMixture(0.0, ((2.0, 1, 1.0),)), 0.1, 5).bound
    assert doubled == pytest.approx(4 * got, rel=1e-15)


def test_certificate_dispatch():
    assert certificate_for(Exponential(2.0), 5).bound == bound_gamma(1, 2.0, 5).bound
    assert certificate_for(Gamma(1.0, 2.0), 5).bound == bound_gamma(2, 1.0, 5).bound
    compound = certificate_for(GeometricExpCompound(0.1), 5)
    assert compound.source is CertificateSource.RANDOM_SUM
    assert compound.bound == pytest.approx(0.9 * GAMMA_CONSTANT / 25, rel=1e-15)
    generic = certificate_for(Compound(Poisson(1.0), Exponential(1.0)), 5)
    assert generic.bound == pytest.approx((1 - math.exp(-1.0)) * GAMMA_CONSTANT / 25, rel=1e-14)
    assert certificate_for(Compound(Geometric(0.1), Exponential(1.0)), 5).bound == compound.bound


def test_certificate_refusals():
    rep = PhaseTypeRep([1.0], [[-1.0]])
    with pytest.raises(NoCertificateError):
        certificate_for(PhaseType(rep), 5)
    truncated = ErlangMixture(0.0, ((1.0, 1, 1.0 - 1e-11),), truncated_mass=1e-11)
    with pytest.raises(NoCertificateError):
        certificate_for(truncated, 5)
    with pytest.raises(NoCertificateError):
        as_erlang_mixture(Gamma(1.0, 2.5))


def test_domain_checks():
    with pytest.raises(DomainError):
        bound_general(-1, 0, 0, 1)
    with pytest.raises(DomainError):
        bound_general(1, 1, 1, 0)
    with pytest.raises(DomainError):
        bound_gamma(2, 0, 1)
    with pytest.raises(DomainError):
        bound_compound(ErlangMixture(0.0, ((1.0, 1, 1.0),)), 1.5, 1)
    with pytest.raises(DomainError):
        ErrorCertificate(-1.0, CertificateSource.GAMMA, 1.0)


def test_certificate_json():
    cert = bound_gamma(2, 1, 5)
    doc = json.loads(cert.to_json())
    assert doc["source"] == "gamma"
    assert doc["bound"] == cert.bound
    assert doc["t"] == 5.0
    assert doc["inputs"]["p"] == 2


def _weighted_norms(p):
    """sup |F''|, sup |x F'''|, sup |x^2 F''''| for the unit-rate gamma CDF, on a dense grid."""
    x = sp.symbols("x", positive=True)
    density = x ** (p - 1) * sp.exp(-x) / sp.gamma(p)
    exprs = [sp.diff(density, x), x * sp.diff(density, x, 2), x ** 2 * sp.diff(density, x, 3)]
    grid = np.linspace(1e-9, 60 + 4 * p, 400_001)
    return [float(np.max(np.abs(sp.lambdify(x, e, "numpy")(grid)))) for e in exprs]


@pytest.mark.parametrize("p", [2, 3, 5, 10])
def test_gamma_norm_chain(p):
    norms = _weighted_norms(p)
    for value, cap in zip(norms, GAMMA_NORMS):
        assert cap - value >= 0, (p, norms)


def test_exponential_norms():
    norms = _weighted_norms(1)
    assert np.allclose(norms, EXPONENTIAL_NORMS, rtol=1e-8, atol=0)
