"""Lattice distributions on {k/t}: the LS discretization step CDF, rounding down,
and compounding of lattice summands.

Functions here take distribution specs by duck typing (``ls_pmf``, ``cdf``,
``has_exact_cdf``, ``counting``/``summand``) so this module does not import
:mod:`lsapprox.distributions`.
"""
from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational

import numpy as np

from . import _kernels
from .errors import DomainError, ExactCDFUnavailable, NumericError, TruncationError

NEGATIVE_MASS_TOL = 1e-13


class Provenance(enum.Enum):
    LS_DISCRETIZATION = "ls_discretization"
    ROUNDING = "rounding"
    COMPOUND = "compound"


@dataclass(frozen=True)
class TruncationPolicy:
    """Stop a lattice once the remaining tail mass is below ``tol``; never exceed ``k_max`` atoms."""

    tol: float = 1e-12
    k_max: int = 2 ** 24

    def __post_init__(self):
        if not (self.tol > 0):
            raise DomainError("tolerance must be positive")
        if self.k_max < 1:
            raise DomainError("k_max must be at least 1")

    @property
    def stop_tol(self):
        """Target handed to the recurrences; the margin absorbs round-off in 1 - sum(masses)."""
        return 0.5 * self.tol

    def tightened(self, factor):
        return TruncationPolicy(tol=self.tol * factor, k_max=self.k_max)


DEFAULT_POLICY = TruncationPolicy()


def clean_masses(masses, tol=NEGATIVE_MASS_TOL):
    """Clamp round-off negatives to zero; anything below ``-tol`` is a real failure."""
    masses = np.asarray(masses, dtype=np.float64)
    if masses.size and masses.min() < -tol:
        k = int(np.argmin(masses))
        raise NumericError(f"lattice mass at k={k} is {masses[k]:.3e} (< -{tol:g})")
    return np.where(masses < 0.0, 0.0, masses)


@dataclass(frozen=True, eq=False)
class StepCDF:
    """Right-continuous step CDF with jumps at k/t."""

    t: float
    cumulative: np.ndarray

    def at_index(self, k):
        """Value on [k/t, (k+1)/t); indices past the stored range return the last value."""
        k = np.asarray(k)
        if np.any(k < 0):
            raise DomainError("grid index must be non-negative")
        idx = np.minimum(k, self.cumulative.size - 1)
        out = self.cumulative[idx]
        return float(out) if out.ndim == 0 else out

    def __call__(self, x):
        return self.at_index(grid_index(self.t, x))


@dataclass(frozen=True, eq=False)
class LatticePMF:
    """Probability masses at k/t, k = 0..len(masses)-1, plus the mass left beyond."""

    t: float
    masses: np.ndarray
    tail_mass: float
    provenance: Provenance

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=np.float64)
        if m.ndim != 1:
            raise DomainError("masses must be one-dimensional")
        if m.size and m.min() < 0:
            raise NumericError("lattice masses must be non-negative")
        if not (0.0 <= self.tail_mass <= 1.0):
            raise NumericError(f"tail mass {self.tail_mass} outside [0, 1]")
        if abs(math.fsum(m) + self.tail_mass - 1.0) > 1e-10:
            raise NumericError("masses and tail do not sum to one")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @classmethod
    def from_masses(cls, t, masses, provenance, clean=True):
        masses = clean_masses(masses) if clean else np.asarray(masses, dtype=np.float64)
        tail = max(0.0, 1.0 - math.fsum(masses))
        return cls(float(t), masses, tail, provenance)

    def __len__(self):
        return self.masses.size

    def cumulative(self):
        return StepCDF(self.t, np.cumsum(self.masses))

    def to_rows(self):
        cum = np.cumsum(self.masses)
        return [{"k": k, "mass": float(m), "cumulative": float(c)}
                for k, (m, c) in enumerate(zip(self.masses, cum))]

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "mass", "cumulative"])
        for row in self.to_rows():
            writer.writerow([row["k"], repr(row["mass"]), repr(row["cumulative"])])
        return buf.getvalue()

    def to_json(self):
        return json.dumps({
            "t": self.t,
            "provenance": self.provenance.value,
            "tail_mass": self.tail_mass,
            "masses": [float(m) for m in self.masses],
        })


def grid_index(t, x):
    """floor(t * x), computed exactly when both arguments are rationals.

    Floats go through a plain floor with no epsilon adjustment, so a decimal
    x that is meant to sit on the grid should be passed as a Fraction.
    """
    if isinstance(x, np.ndarray):
        if np.any(x < 0):
            raise DomainError("x must be non-negative")
        return np.floor(float(t) * x).astype(np.int64)
    if x < 0:
        raise DomainError("x must be non-negative")
    if isinstance(x, Rational) and isinstance(t, (Rational, float)):
        return math.floor(Fraction(t) * Fraction(x))
    return math.floor(float(t) * float(x))


def lattice_cdf(spec, t, x, policy=None):
    """The step CDF of the LS lattice variable at scale t, evaluated at x."""
    return spec.ls_pmf(t, policy).cumulative()(x)


def round_down_pmf(spec, t, policy=None):
    """Lattice obtained by rounding X down to floor(tX)/t, from exact CDF differences."""
    policy = policy or DEFAULT_POLICY
    if t <= 0:
        raise DomainError("t must be positive")
    if not spec.has_exact_cdf:
        raise ExactCDFUnavailable(f"no exact CDF for {type(spec).__name__}")
    t = float(t)
    n = 256
    while True:
        edges = spec.cdf(np.arange(1, n + 1, dtype=np.float64) / t)
        tail = 1.0 - edges
        hit = np.flatnonzero(tail < policy.stop_tol)
        if hit.size or n >= policy.k_max:
            stop = int(hit[0]) + 1 if hit.size else n
            if not hit.size:
                raise TruncationError(f"rounding lattice tail {tail[-1]:.3e} at k_max={policy.k_max}")
            edges = edges[:stop]
            masses = np.diff(np.concatenate(([0.0], edges)))
            return LatticePMF.from_masses(t, masses, Provenance.ROUNDING)
        n = min(policy.k_max, 4 * n)


def panjer_compound(counting, summand, policy=None, n_terms=None):
    """Distribution of a random sum of i.i.d. lattice summands on the same grid.

    (a, b, 0) counting laws use the Panjer recursion; a finite counting pmf is
    handled by explicit convolution powers.  ``n_terms`` requests exactly that
    many leading masses instead of a tail-controlled lattice.
    """
    policy = policy or DEFAULT_POLICY
    f = np.asarray(summand.masses, dtype=np.float64)
    if f.size == 0:
        raise NumericError("empty summand lattice")
    ab = counting.panjer_ab()
    if ab is None:
        masses = _compound_by_convolution(counting.masses_array(), f, n_terms)
    else:
        a, b = ab
        if 1.0 - a * f[0] <= 1e-15:
            raise NumericError("Panjer recursion diverges: 1 - a*f0 is not positive")
        g0 = counting.pgf(f[0])
        target = counting.pgf(math.fsum(f))
        masses, status = _kernels.panjer_ab0(f, a, b, g0, target, policy.stop_tol, policy.k_max,
                                             n_terms or 0)
        if status:
            raise TruncationError(f"compound tail above {policy.tol:g} at k_max={policy.k_max}")
    return LatticePMF.from_masses(summand.t, masses, Provenance.COMPOUND)


def _compound_by_convolution(weights, f, n_terms):
    size = (len(weights) - 1) * (f.size - 1) + 1
    if n_terms:
        size = n_terms
    out = np.zeros(size)
    power = np.array([1.0])
    for n, w in enumerate(weights):
        if n > 0:
            power = np.convolve(power, f)[:size]
        if w:
            out[: power.size] += w * power
    return out


def rounded_sum_pmf(spec, t, policy=None):
    """Round each summand of a random sum down to the grid, then compound.

    For a plain (non-compound) spec this is just :func:`round_down_pmf`.
    """
    policy = policy or DEFAULT_POLICY
    counting = getattr(spec, "counting", None)
    if counting is None:
        return round_down_pmf(spec, t, policy)
    lattice = round_down_pmf(spec.summand, t, policy.tightened(1e-3))
    return panjer_compound(counting, lattice, policy)


def is_integer(value):
    return isinstance(value, Integral) or (isinstance(value, float) and value.is_integer())
