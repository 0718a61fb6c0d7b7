"""Comparison tables of the lattice approximants against exact CDFs."""
from __future__ import annotations

from fractions import Fraction

from .approximants import build_m2, post_widder, stehfest2
from .discretization import DEFAULT_POLICY, grid_index, rounded_sum_pmf
from .distributions import GeometricExpCompound
from .errors import NumericError

TABLE1_KS = (0, 5, 25, 50, 75, 100, 150, 200)
TABLE2_KS = (5, 25, 50, 75, 100, 150, 200)


def _is_order(t):
    return Fraction(t).denominator == 1


def table1(p=0.1, t=5, ks=TABLE1_KS):
    """Rows (x, F, L*_t, R_t, W_t) for the geometric-exponential compound at x = k/t."""
    spec = GeometricExpCompound(p)
    t_float = float(t)
    lstar = spec.ls_pmf(t_float).cumulative()
    rounded = rounded_sum_pmf(spec, t_float).cumulative()
    rows = []
    for k in ks:
        x = Fraction(k) / Fraction(t)
        rows.append({
            "x": x,
            "F": spec.cdf(float(x)),
            "L*": lstar.at_index(k),
            "R": rounded.at_index(k),
            "W": post_widder(spec, int(t), float(x)),
        })
    return rows


def table2(p=0.1, t=5, ks=TABLE2_KS):
    """Rows (x, F, L*_t((k-1)/t), L*_2t((2k-1)/(2t)), M^[2]_t, G^[2]_t) at x = k/t."""
    spec = GeometricExpCompound(p)
    t_float = float(t)
    l_t = spec.ls_pmf(t_float).cumulative()
    l_2t = spec.ls_pmf(2 * t_float).cumulative()
    m2 = build_m2(spec, t_float)
    rows = []
    for k in ks:
        x = Fraction(k) / Fraction(t)
        rows.append({
            "x": x,
            "F": spec.cdf(float(x)),
            "L*_t": l_t.at_index(k - 1) if k >= 1 else 0.0,
            "L*_2t": l_2t.at_index(2 * k - 1) if k >= 1 else 0.0,
            "M2": m2.at_knot(k),
            "G2": stehfest2(spec, int(t), float(x)),
        })
    return rows


def comparison_rows(spec, t, xs, clamp=False, policy=None):
    """Every approximant that applies to ``spec`` at scale t, one row per x.

    Columns that do not apply (no exact CDF, non-integer t for Post-Widder)
    are None.
    """
    policy = policy or DEFAULT_POLICY
    t_float = float(t)
    lstar = spec.ls_pmf(t_float, policy).cumulative()
    m2 = build_m2(spec, t_float, policy)
    try:
        rounded = rounded_sum_pmf(spec, t_float, policy).cumulative()
    except NumericError:
        rounded = None
    exact = spec.has_exact_cdf
    order = int(Fraction(t)) if _is_order(t) else None
    rows = []
    for x in xs:
        xf = float(x)
        k = grid_index(Fraction(t), x)
        row = {"x": x}
        row["F"] = spec.cdf(xf) if exact else None
        row["L*"] = lstar.at_index(k)
        row["R"] = rounded.at_index(k) if rounded is not None else None
        row["W"] = post_widder(spec, order, xf, clamp=clamp) if order else None
        row["M2"] = m2(x, clamp=clamp)
        row["G2"] = stehfest2(spec, order, xf, clamp=clamp) if order else None
        rows.append(row)
    return rows
