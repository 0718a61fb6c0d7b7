import itertools
import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lsapprox.discretization import (LatticePMF, Provenance, StepCDF, TruncationPolicy, grid_index,
                                     lattice_cdf, panjer_compound, round_down_pmf, rounded_sum_pmf)
from lsapprox.distributions import (Binomial, Compound, ErlangMixture, Exponential, FinitePMF,
                                    Gamma, Geometric, GeometricExpCompound, NegativeBinomial,
                                    Poisson)
from lsapprox.errors import DomainError, ExactCDFUnavailable, NumericError

TEST_COMPOUND = GeometricExpCompound(0.1)


@pytest.mark.parametrize("x, expected", [(1, 0.2008), (0, 0.1176)])
def test_lattice_cdf_table_values(x, expected):
    assert abs(lattice_cdf(TEST_COMPOUND, 5, x) - expected) <= 5e-5


def test_lattice_cdf_closed_form():
    assert lattice_cdf(TEST_COMPOUND, 5, 1) == pytest.approx(1 - 0.9 * (5 / 5.1) ** 6, abs=1e-12)


def test_round_down_exponential():
    lat = round_down_pmf(Exponential(1.0), 5)
    k = np.arange(len(lat))
    assert lat.provenance is Provenance.ROUNDING
    assert np.max(np.abs(lat.masses - np.exp(-k / 5) * (1 - math.exp(-0.2)))) <= 1e-15
    assert lat.masses[0] == pytest.approx(1 - math.exp(-0.2), abs=1e-16)
    assert math.fsum(lat.masses) + lat.tail_mass == pytest.approx(1.0, abs=1e-15)
    assert lat.tail_mass < 1e-12


def test_round_down_needs_exact_cdf():
    spec = Compound(Poisson(1.0), ErlangMixture(0.0, ((1.0, 1, 0.5), (2.0, 1, 0.5))))
    with pytest.raises(ExactCDFUnavailable):
        round_down_pmf(spec, 5)


def test_round_down_keeps_atom():
    lat = round_down_pmf(TEST_COMPOUND, 5)
    assert lat.masses[0] == pytest.approx(TEST_COMPOUND.cdf(0.2), abs=1e-15)


def test_panjer_geometric_on_exponential_lattice():
    summand = Exponential(1.0).ls_pmf(5, TruncationPolicy(1e-16))
    out = panjer_compound(Geometric(0.1), summand)
    assert out.provenance is Provenance.COMPOUND
    assert out.cumulative().at_index(5) == pytest.approx(1 - 0.9 * (5 / 5.1) ** 6, abs=1e-12)


def test_panjer_empty_sum():
    summand = Exponential(1.0).ls_pmf(5)
    out = panjer_compound(FinitePMF((1.0,)), summand)
    assert out.masses.tolist() == [1.0]
    assert out.tail_mass == 0.0


def rounded_compound_closed_form(p, t, k):
    q = math.exp(-1 / t)
    return 1 - (1 - p) * (q / (1 - (1 - p) * (1 - q))) ** (k + 1)


def test_rounded_compound():
    cum = rounded_sum_pmf(TEST_COMPOUND, 5).cumulative()
    assert abs(cum.at_index(5) - 0.2108) <= 5e-5
    k = np.arange(300)
    ref = np.array([rounded_compound_closed_form(0.1, 5, kk) for kk in k])
    assert np.max(np.abs(cum.at_index(k) - ref)) <= 1e-12


@pytest.mark.parametrize("p", [0.1, 0.5])
@pytest.mark.parametrize("t", [1, 5, 10])
def test_compounding_identity(p, t):
    compound = panjer_compound(Geometric(p), Exponential(1.0).ls_pmf(t, TruncationPolicy(1e-16)))
    closed = GeometricExpCompound(p).ls_pmf(t)
    n = min(len(compound), len(closed))
    assert np.max(np.abs(compound.masses[:n] - closed.masses[:n])) <= 1e-12


def brute_force_compound(counting_pmf, f, size):
    """Enumerate every (m, y_1..y_m) outcome explicitly."""
    out = np.zeros(size)
    for m, pm in enumerate(counting_pmf):
        if pm == 0:
            continue
        for ys in itertools.product(range(len(f)), repeat=m):
            s = sum(ys)
            if s < size:
                out[s] += pm * math.prod(f[y] for y in ys)
    return out


def _lattice(masses, t=1.0):
    return LatticePMF.from_masses(t, masses, Provenance.LS_DISCRETIZATION)


def test_finite_counting_matches_enumeration():
    f = np.array([0.1, 0.3, 0.2, 0.25, 0.15])
    counting = FinitePMF((0.1, 0.2, 0.3, 0.4))
    got = panjer_compound(counting, _lattice(f)).masses
    ref = brute_force_compound(counting.masses, f, got.size)
    assert np.max(np.abs(got - ref)) <= 1e-14
    assert got.size == 3 * 4 + 1


@pytest.mark.parametrize("counting", [Poisson(1.3), NegativeBinomial(2.5, 0.6), Binomial(4, 0.3),
                                      Geometric(0.55)], ids=lambda c: type(c).__name__)
def test_panjer_matches_enumeration(counting):
    f = np.array([0.2, 0.5, 0.3])
    got = panjer_compound(counting, _lattice(f), TruncationPolicy(1e-15)).masses
    size = 12
    got = np.pad(got, (0, max(0, size - got.size)))
    weights = counting.pmf(np.arange(40))
    # enumeration stops at m <= 11; the dropped outcomes weigh at most P(M > 11)
    ref = brute_force_compound(weights[:12], f, size)
    tail_bound = float(counting.sf(11))
    assert np.max(np.abs(got[:size] - ref)) <= 1e-13 + tail_bound


def test_panjer_divergence_guard():
    summand = _lattice(np.array([1.0]))
    with pytest.raises(NumericError, match="diverges"):
        panjer_compound(Geometric(1e-17), summand)


def test_panjer_n_terms():
    out = panjer_compound(Poisson(3.0), Exponential(1.0).ls_pmf(2.0), n_terms=9)
    assert len(out) == 9


@given(x=st.fractions(min_value=0, max_value=60, max_denominator=40))
@settings(max_examples=100, deadline=None)
def test_lattice_cdf_constant_on_cells(x):
    t = 5
    k = math.floor(x * t)
    left = Fraction(k, t)
    assert lattice_cdf(TEST_COMPOUND, t, x) == lattice_cdf(TEST_COMPOUND, t, left)


def test_lattice_cdf_non_decreasing():
    cum = Gamma(1.0, 2.0).ls_pmf(7.0).cumulative()
    xs = np.linspace(0, 30, 5001)
    values = cum(xs)
    assert np.all(np.diff(values) >= 0)
    assert values[-1] <= 1.0


def test_step_cdf_convergence_rate():
    spec = Gamma(1.0, 2.0)
    xs = np.linspace(0, 40, 40_001)
    F = spec.cdf(xs)

    def sup_err(t):
        return np.max(np.abs(spec.ls_pmf(t).cumulative()(xs) - F))

    errors = [sup_err(t) for t in (5, 10, 20, 40)]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    assert all(1.7 <= r <= 2.3 for r in ratios), ratios


def test_grid_index_exact_for_rationals():
    # 0.29 * 100 rounds to 28.999999999999996 in binary floating point
    assert grid_index(100, 0.29) == 28
    assert grid_index(100, Fraction("0.29")) == 29
    assert grid_index(5, Fraction(50, 5)) == 50
    assert grid_index(5.0, Fraction(7, 5)) == 7
    with pytest.raises(DomainError):
        grid_index(5, -1)


def test_lattice_pmf_invariants():
    with pytest.raises(NumericError):
        LatticePMF(1.0, np.array([0.5, 0.2]), 0.1, Provenance.ROUNDING)
    with pytest.raises(NumericError):
        LatticePMF(1.0, np.array([1.2, -0.2]), 0.0, Provenance.ROUNDING)
    with pytest.raises(NumericError):
        LatticePMF.from_masses(1.0, np.array([0.5, -1e-6, 0.5]), Provenance.ROUNDING)
    clamped = LatticePMF.from_masses(1.0, np.array([0.5, -1e-16, 0.5]), Provenance.ROUNDING)
    assert clamped.masses[1] == 0.0
    assert not clamped.masses.flags.writeable


def test_lattice_pmf_serialization():
    lat = _lattice(np.array([0.25, 0.5, 0.25]), t=2.0)
    lines = lat.to_csv().splitlines()
    assert lines[0] == "k,mass,cumulative"
    assert lines[2] == "1,0.5,0.75"
    doc = json.loads(lat.to_json())
    assert doc["masses"] == [0.25, 0.5, 0.25]
    assert doc["provenance"] == "ls_discretization"
    assert doc["t"] == 2.0


def test_step_cdf_past_range():
    cdf = StepCDF(2.0, np.array([0.2, 0.7, 1.0]))
    assert cdf(100.0) == 1.0
    assert cdf(Fraction(1, 2)) == 0.7


def test_truncation_policy_validation():
    with pytest.raises(DomainError):
        TruncationPolicy(tol=0.0)
    with pytest.raises(DomainError):
        TruncationPolicy(k_max=0)
