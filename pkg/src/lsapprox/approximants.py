"""CDF approximants built from LS lattices.

* ``M^[2]_t``: a Richardson combination of the lattice step CDFs at scales t
  and 2t, linearly interpolated between the knots k/t.  Error O(1/t^2).
* ``W_t``: Post-Widder inversion, a partial sum of the lattice pmf at scale t/x.
* ``G^[2]_t``: the order-two Stehfest combination 2 W_{2t} - W_t.

Raw values are not clamped, so they may leave [0, 1] by O(1/t^2); pass
``clamp=True`` to clip user-facing output.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral

import numpy as np

from .discretization import DEFAULT_POLICY, grid_index
from .errors import DomainError


@functools.lru_cache(maxsize=64)
def _cumulative(spec, t, policy):
    lattice = spec.ls_pmf(t, policy)
    return np.cumsum(lattice.masses), lattice.tail_mass


def _cum_at(cum, idx):
    """Prefix sums at integer indices; negative index gives 0, past the end the last value."""
    idx = np.asarray(idx)
    out = np.where(idx < 0, 0.0, cum[np.clip(idx, 0, cum.size - 1)])
    return out


@dataclass(frozen=True, eq=False)
class ApproximantCDF:
    """Knot values v_k = M^[2]_t F(k/t) with linear interpolation in between.

    ``knot_values`` holds raw values; past the last knot the curve is flat.
    """

    t: float
    knot_values: np.ndarray
    tail_mass: float

    def at_knot(self, k):
        k = np.asarray(k)
        if np.any(k < 0):
            raise DomainError("knot index must be non-negative")
        out = self.knot_values[np.minimum(k, self.knot_values.size - 1)]
        return float(out) if out.ndim == 0 else out

    def __call__(self, x, clamp=False):
        scalar = np.ndim(x) == 0
        if scalar:
            k = grid_index(self.t, x)
            frac = float(Fraction(self.t) * Fraction(x) - k) if _is_rational(x) else self.t * float(x) - k
        else:
            arr = np.asarray(x, dtype=np.float64)
            k = grid_index(self.t, arr)
            frac = self.t * arr - k
        lo = self.at_knot(k)
        hi = self.at_knot(np.asarray(k) + 1)
        out = frac * hi + (1.0 - frac) * lo
        if clamp:
            out = np.clip(out, 0.0, 1.0)
        return float(out) if scalar else out


def _is_rational(x):
    return isinstance(x, (Integral, Fraction))


def _check_t(t):
    if not t > 0:
        raise DomainError("t must be positive")
    return float(t)


def build_m2(spec, t, policy=None):
    """Full M^[2]_t knot sequence from one lattice at t and one at 2t."""
    t = _check_t(t)
    policy = policy or DEFAULT_POLICY
    cum_t, tail_t = _cumulative(spec, t, policy)
    cum_2t, tail_2t = _cumulative(spec, 2.0 * t, policy)
    n_knots = max(cum_t.size, (cum_2t.size + 1) // 2) + 2
    k = np.arange(n_knots)
    knots = 2.0 * _cum_at(cum_2t, 2 * k - 1) - _cum_at(cum_t, k - 1)
    knots[0] = spec.mass_at_zero
    return ApproximantCDF(t, knots, max(tail_t, tail_2t))


def m2_grid(spec, t, k, policy=None):
    """M^[2]_t F(k/t) = 2 L*_{2t}F((2k-1)/(2t)) - L*_t F((k-1)/t), and F(0) at k = 0."""
    if k < 0 or int(k) != k:
        raise DomainError("k must be a non-negative integer")
    return build_m2(spec, t, policy).at_knot(int(k))


def m2_eval(spec, t, x, policy=None, clamp=False):
    """M^[2]_t F(x), linear between knots.  Exact rationals give exact knot lookup."""
    return build_m2(spec, t, policy)(x, clamp=clamp)


def _check_order(t):
    if isinstance(t, bool) or not (isinstance(t, Integral) or (isinstance(t, float) and t.is_integer())):
        raise DomainError("Post-Widder order t must be a positive integer")
    if t < 1:
        raise DomainError("Post-Widder order t must be a positive integer")
    return int(t)


def post_widder(spec, t, x, clamp=False):
    """Post-Widder inversion W_t F(x) of order t.

    Uses W_t F(x) = sum_{j<t} d_j(t/x), the first t lattice masses at scale
    t/x.  At x = 0 the value is the limit F(0) = P(X = 0), which holds for
    every non-negative X.
    """
    t = _check_order(t)
    x = float(x)
    if not x >= 0 or math.isinf(x):
        raise DomainError("x must be non-negative and finite")
    if x == 0.0:
        out = spec.mass_at_zero
    else:
        out = math.fsum(spec.ls_pmf(t / x, n_terms=t).masses)
    return min(max(out, 0.0), 1.0) if clamp else out


def stehfest2(spec, t, x, clamp=False):
    """Order-two Stehfest value G^[2]_t F(x) = 2 W_{2t} F(x) - W_t F(x)."""
    t = _check_order(t)
    out = 2.0 * post_widder(spec, 2 * t, x) - post_widder(spec, t, x)
    return min(max(out, 0.0), 1.0) if clamp else out
