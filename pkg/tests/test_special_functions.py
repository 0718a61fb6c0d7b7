import math

import mpmath
import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize_scalar

from lsapprox.errors import DomainError
from lsapprox.special_functions import (EULER_GAMMA, EnvelopeId, digamma, envelope,
                                        gamma_density, gamma_density_derivative, log_gamma)
from lsapprox.special_functions import test_phi as phi_fn

mpmath.mp.dps = 40

LOG_GRID = np.logspace(-2, 2, 10_000)


@pytest.mark.parametrize("x, expected", [(1.0, 0.0), (2.0, 0.0), (5.0, math.log(24.0))])
def test_log_gamma_examples(x, expected):
    assert log_gamma(x) == pytest.approx(expected, abs=1e-13)


def test_log_gamma_against_mpmath():
    xs = np.logspace(-3, 6, 400)
    got = log_gamma(xs)
    ref = np.array([float(mpmath.loggamma(mpmath.mpf(float(x)))) for x in xs])
    # absolute 1e-13 where the value is O(1), relative beyond (double spacing dominates)
    assert np.all(np.abs(got - ref) <= 1e-13 * np.maximum(1.0, np.abs(ref)))


def test_digamma_against_mpmath():
    xs = np.logspace(-3, 6, 400)
    got = digamma(xs)
    ref = np.array([float(mpmath.digamma(mpmath.mpf(float(x)))) for x in xs])
    assert np.max(np.abs(got - ref)) <= 1e-12


def test_digamma_examples():
    assert digamma(1.0) == pytest.approx(-EULER_GAMMA, abs=1e-12)
    assert digamma(3.0) - digamma(2.0) == pytest.approx(0.5, abs=1e-12)
    gap = math.log(3.0) - digamma(3.0)
    assert 1 / 6 <= gap <= 1 / 3


def test_euler_constant_matches_high_precision():
    assert EULER_GAMMA == float(mpmath.euler)


def test_digamma_recurrence():
    xs = np.logspace(-2, 4, 5000)
    assert np.max(np.abs(digamma(xs + 1) - digamma(xs) - 1 / xs)) <= 1e-12


@given(st.floats(min_value=1e-3, max_value=1e6))
@settings(max_examples=200, deadline=None)
def test_digamma_scalar_matches_vector(x):
    assert digamma(x) == digamma(np.array([x]))[0]


def test_digamma_log_gap_bounds():
    gap = np.log(LOG_GRID) - digamma(LOG_GRID)
    assert np.all(1 / (2 * LOG_GRID) <= gap)
    assert np.all(gap <= 1 / LOG_GRID)


def test_digamma_second_order_gap():
    excess = np.log(LOG_GRID) - digamma(LOG_GRID) - 1 / (2 * LOG_GRID)
    assert np.all(excess <= 1 / (12 * LOG_GRID ** 2))


@pytest.mark.parametrize("fn", [log_gamma, digamma])
@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan")])
def test_domain_errors(fn, bad):
    with pytest.raises(DomainError):
        fn(bad)


@pytest.mark.parametrize("x, order, expected", [(0.0, 0, 0.0), (1.0, 0, 0.75), (2.0, 4, 0.25)])
def test_phi_examples(x, order, expected):
    assert phi_fn(x, order) == pytest.approx(expected, abs=1e-15)


def test_phi_derivatives_match_symbolic():
    x = sp.symbols("x", positive=True)
    phi = x ** 2 / 2 * (sp.Rational(3, 2) - sp.log(x))
    for order in range(5):
        expr = sp.diff(phi, x, order)
        for value in (0.3, 1.0, 2.5, 7.0):
            assert phi_fn(value, order) == pytest.approx(float(expr.subs(x, value)), rel=1e-14, abs=1e-15)


@pytest.mark.parametrize("order", [1, 2, 3, 4])
def test_phi_derivatives_need_positive_x(order):
    with pytest.raises(DomainError):
        phi_fn(0.0, order)


def test_phi_rejects_bad_order():
    with pytest.raises(DomainError):
        phi_fn(1.0, 5)


@pytest.mark.parametrize("which, p, expected", [
    (EnvelopeId.G1, 1.0, 1.0),
    (EnvelopeId.G2, 1.0, math.exp(-1)),
    (EnvelopeId.G3, 2.0, 1.0),
    (EnvelopeId.G4, 2.0, 1.0),
    (EnvelopeId.G1, 2.0, math.exp(-1)),
])
def test_envelope_examples(which, p, expected):
    assert envelope(which, p) == pytest.approx(expected, rel=1e-14)


@pytest.mark.parametrize("which, lo", [(EnvelopeId.G1, 1.0), (EnvelopeId.G2, 1.0),
                                       (EnvelopeId.G3, 2.0), (EnvelopeId.G4, 2.0)])
def test_envelopes_non_increasing(which, lo):
    ps = np.linspace(lo, lo + 300.0, 1000)
    values = np.array([envelope(which, p) for p in ps])
    assert np.all(np.diff(values) <= 1e-15)
    assert np.all(np.isfinite(values)) and np.all(values > 0)


@pytest.mark.parametrize("which, bad", [(EnvelopeId.G1, 0.5), (EnvelopeId.G3, 1.9), (EnvelopeId.G4, 1.0)])
def test_envelope_domain(which, bad):
    with pytest.raises(DomainError):
        envelope(which, bad)


def _sup(fn, lo, hi):
    grid = np.linspace(lo, hi, 200_001)
    i = int(np.argmax(fn(grid)))
    res = minimize_scalar(lambda v: -fn(np.array([v]))[0], bounds=(grid[max(i - 1, 0)], grid[i + 1]),
                          method="bounded", options={"xatol": 1e-12})
    return max(-res.fun, fn(grid).max())


@pytest.mark.parametrize("p", [1, 2, 5, 10])
def test_envelope_g1_is_density_sup(p):
    sup = _sup(lambda x: gamma_density(p, x), 1e-12, 60.0)
    assert sup == pytest.approx(envelope(EnvelopeId.G1, p), rel=1e-8)


@pytest.mark.parametrize("p", [1, 2, 5, 10])
def test_envelope_g2_is_weighted_slope_sup(p):
    sup = _sup(lambda x: np.abs(x * gamma_density_derivative(p, 1, x)), 1e-12, 60.0)
    assert sup == pytest.approx(envelope(EnvelopeId.G2, p), rel=1e-8)


@pytest.mark.parametrize("p", [3, 5, 10])
def test_envelope_g3_is_slope_sup(p):
    sup = _sup(lambda x: np.abs(gamma_density_derivative(p, 1, x)), 1e-12, 60.0)
    assert sup == pytest.approx(envelope(EnvelopeId.G3, p), rel=1e-8)


@pytest.mark.parametrize("p", [2.0, 3.5, 7.0])
@pytest.mark.parametrize("n", [0, 1, 2, 3, 4])
def test_gamma_density_derivative_matches_symbolic(p, n):
    x = sp.symbols("x", positive=True)
    pp = sp.nsimplify(p)
    expr = sp.diff(sp.exp(-x) * x ** (pp - 1) / sp.gamma(pp), x, n)
    for value in (0.4, 1.0, 3.0, 9.0):
        assert gamma_density_derivative(p, n, value) == pytest.approx(
            float(expr.subs(x, value)), rel=1e-12, abs=1e-15)


@pytest.mark.parametrize("p", [2, 5, 10])
def test_third_weighted_norm_dominates_second(p):
    # for a gamma CDF g: g''' = f'' and g'''' = f'''
    x = np.linspace(1e-6, 80.0, 400_001)
    xg3 = np.abs(x * gamma_density_derivative(p, 2, x)).max()
    x2g4 = np.abs(x * x * gamma_density_derivative(p, 3, x)).max()
    assert xg3 <= x2g4
