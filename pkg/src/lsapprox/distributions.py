"""Distribution families with exact CDFs and LS lattice pmfs.

Every spec is a frozen dataclass validated on construction.  The lattice pmf
at scale t has masses d_k(t) = (-t)^k phi^(k)(t) / k!, where phi is the
Laplace-Stieltjes transform; each family computes them by its own recurrence.
Rates follow the convention that ``Gamma(a, p)`` has density
a^p x^(p-1) exp(-a x) / Gamma(p).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats
from scipy.special import gammainc

from . import _kernels
from .discretization import (DEFAULT_POLICY, LatticePMF, Provenance, TruncationPolicy,
                             clean_masses, is_integer, panjer_compound)
from .errors import DomainError, ExactCDFUnavailable, SpecError, TruncationError
from .phase_type import PhaseTypeRep, ph_cdf, ph_lattice_masses

WEIGHT_TOL = 1e-12
# summand lattices feeding a compound are cut much deeper than the compound itself
SUMMAND_TOL_FACTOR = 1e-4


def _require(cond, message):
    if not cond:
        raise SpecError(message)


def _probability(value, name, open_low=False, open_high=False):
    ok = (value > 0 if open_low else value >= 0) and (value < 1 if open_high else value <= 1)
    _require(ok and math.isfinite(value), f"{name} must be a probability, got {value!r}")


def _positive(value, name):
    _require(math.isfinite(value) and value > 0, f"{name} must be positive and finite, got {value!r}")


def _grid(x):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr >= 0)):
        raise DomainError("x must be non-negative")
    return arr


def _scalar_or_array(out):
    out = np.asarray(out, dtype=np.float64)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# counting laws
# ---------------------------------------------------------------------------

class CountingSpec:
    """Law of a non-negative integer count M."""

    def pmf(self, k):
        raise NotImplementedError

    def pgf(self, s):
        raise NotImplementedError

    def panjer_ab(self):
        """(a, b) with P(M=k) = (a + b/k) P(M=k-1), or None for a finite table."""
        raise NotImplementedError

    def sf(self, k):
        """P(M > k)."""
        raise NotImplementedError

    def pmf_until(self, tol):
        """P(M=0), ..., P(M=K) with K the first index where P(M > K) < ``tol``.

        The tail is read from the survival function, not from 1 - cumsum,
        which cannot resolve tails below the double spacing near 1.
        """
        n = 64
        while True:
            hit = np.flatnonzero(np.asarray(self.sf(np.arange(n))) < tol)
            if hit.size:
                return np.asarray(self.pmf(np.arange(hit[0] + 1)), dtype=np.float64)
            if n > 1 << 24:
                raise TruncationError("counting law has too heavy a tail to enumerate")
            n *= 4


@dataclass(frozen=True)
class Geometric(CountingSpec):
    """P(M=k) = (1-p)^k p for k >= 0."""

    p: float

    def __post_init__(self):
        _probability(self.p, "geometric p", open_low=True)

    def pmf(self, k):
        return stats.geom.pmf(np.asarray(k) + 1, self.p)

    def sf(self, k):
        return stats.geom.sf(np.asarray(k) + 1, self.p)

    def pgf(self, s):
        return self.p / (1.0 - (1.0 - self.p) * s)

    def panjer_ab(self):
        return 1.0 - self.p, 0.0

    @property
    def mean(self):
        return (1.0 - self.p) / self.p

    def to_dict(self):
        return {"type": "geometric", "p": self.p}


@dataclass(frozen=True)
class Poisson(CountingSpec):
    lam: float

    def __post_init__(self):
        _positive(self.lam, "Poisson rate")

    def pmf(self, k):
        return stats.poisson.pmf(k, self.lam)

    def sf(self, k):
        return stats.poisson.sf(k, self.lam)

    def pgf(self, s):
        return math.exp(self.lam * (s - 1.0))

    def panjer_ab(self):
        return 0.0, self.lam

    @property
    def mean(self):
        return self.lam

    def to_dict(self):
        return {"type": "poisson", "lambda": self.lam}


@dataclass(frozen=True)
class NegativeBinomial(CountingSpec):
    """P(M=k) = C(k+r-1, k) p^r (1-p)^k."""

    r: float
    p: float

    def __post_init__(self):
        _positive(self.r, "negative binomial r")
        _probability(self.p, "negative binomial p", open_low=True)

    def pmf(self, k):
        return stats.nbinom.pmf(k, self.r, self.p)

    def sf(self, k):
        return stats.nbinom.sf(k, self.r, self.p)

    def pgf(self, s):
        return (self.p / (1.0 - (1.0 - self.p) * s)) ** self.r

    def panjer_ab(self):
        q = 1.0 - self.p
        return q, (self.r - 1.0) * q

    @property
    def mean(self):
        return self.r * (1.0 - self.p) / self.p

    def to_dict(self):
        return {"type": "negative_binomial", "r": self.r, "p": self.p}


@dataclass(frozen=True)
class Binomial(CountingSpec):
    n: int
    p: float

    def __post_init__(self):
        _require(is_integer(self.n) and self.n >= 1, "binomial n must be a positive integer")
        object.__setattr__(self, "n", int(self.n))
        _probability(self.p, "binomial p")

    def pmf(self, k):
        return stats.binom.pmf(k, self.n, self.p)

    def sf(self, k):
        return np.where(np.asarray(k) >= self.n, 0.0, stats.binom.sf(k, self.n, self.p))

    def pgf(self, s):
        return (1.0 - self.p + self.p * s) ** self.n

    def panjer_ab(self):
        if self.p >= 1.0:
            return None
        ratio = self.p / (1.0 - self.p)
        return -ratio, (self.n + 1) * ratio

    def masses_array(self):
        return self.pmf(np.arange(self.n + 1))

    @property
    def mean(self):
        return self.n * self.p

    def to_dict(self):
        return {"type": "binomial", "n": self.n, "p": self.p}


@dataclass(frozen=True)
class FinitePMF(CountingSpec):
    masses: tuple

    def __post_init__(self):
        m = tuple(float(v) for v in self.masses)
        _require(len(m) > 0, "finite pmf needs at least one mass")
        _require(all(v >= 0 and math.isfinite(v) for v in m), "finite pmf masses must be non-negative")
        _require(abs(math.fsum(m) - 1.0) <= WEIGHT_TOL, "finite pmf masses must sum to 1")
        object.__setattr__(self, "masses", m)

    def pmf(self, k):
        k = np.asarray(k)
        table = np.asarray(self.masses)
        inside = (k >= 0) & (k < table.size)
        return np.where(inside, table[np.clip(k, 0, table.size - 1)], 0.0)

    def sf(self, k):
        k = np.asarray(k)
        tails = np.append(np.cumsum(self.masses[::-1])[::-1][1:], 0.0)
        return np.where(k >= len(self.masses) - 1, 0.0, tails[np.clip(k, 0, len(self.masses) - 1)])

    def pgf(self, s):
        return float(np.polynomial.polynomial.polyval(s, self.masses))

    def panjer_ab(self):
        return None

    def masses_array(self):
        return np.asarray(self.masses)

    @property
    def mean(self):
        return math.fsum(k * m for k, m in enumerate(self.masses))

    def to_dict(self):
        return {"type": "finite_pmf", "masses": list(self.masses)}


# ---------------------------------------------------------------------------
# distribution specs
# ---------------------------------------------------------------------------

class DistributionSpec:
    """Common interface: ``cdf``, ``ls_pmf``, ``mass_at_zero``, ``scaled``, ``to_dict``."""

    has_exact_cdf = True

    def _check(self):
        pass

    def cdf(self, x):
        raise NotImplementedError

    def _lattice(self, t, policy, n_terms):
        raise NotImplementedError

    def ls_pmf(self, t, policy=None, n_terms=None):
        """Lattice pmf d_0, d_1, ... at scale t.

        By default the lattice runs until the tail is below ``policy.tol``;
        ``n_terms`` instead returns exactly that many leading masses.
        """
        if not t > 0:
            raise DomainError("t must be positive")
        policy = policy or DEFAULT_POLICY
        if n_terms is not None and n_terms < 1:
            raise DomainError("n_terms must be at least 1")
        masses = self._lattice(float(t), policy, int(n_terms or 0))
        return LatticePMF.from_masses(t, masses, Provenance.LS_DISCRETIZATION)

    def to_json(self):
        return json.dumps(self.to_dict())


def _gamma_lattice(shape, u, policy, n_terms):
    masses, bound, status, direct = _kernels.negbin_lattice(shape, u, policy.stop_tol, policy.k_max, n_terms)
    if status:
        raise TruncationError(f"lattice tail {bound:.3e} above {policy.tol:g} at k_max={policy.k_max}")
    if not direct and not n_terms:
        # started from the mode in log space; pin the total to the certified tail
        masses = masses * ((1.0 - bound) / math.fsum(masses))
    return clean_masses(masses)


@dataclass(frozen=True)
class Exponential(DistributionSpec):
    rate: float

    def __post_init__(self):
        self._check()

    def _check(self):
        _positive(self.rate, "rate")

    @property
    def mass_at_zero(self):
        return 0.0

    @property
    def mean(self):
        return 1.0 / self.rate

    def cdf(self, x):
        return _scalar_or_array(-np.expm1(-self.rate * _grid(x)))

    def _lattice(self, t, policy, n_terms):
        return _gamma_lattice(1.0, t / self.rate, policy, n_terms)

    def scaled(self, c):
        return Exponential(self.rate / c)

    def to_dict(self):
        return {"type": "exponential", "rate": self.rate}


@dataclass(frozen=True)
class Gamma(DistributionSpec):
    """Gamma law with rate ``a`` and shape ``p``."""

    a: float
    p: float

    def __post_init__(self):
        self._check()

    def _check(self):
        _positive(self.a, "gamma rate a")
        _positive(self.p, "gamma shape p")

    @property
    def mass_at_zero(self):
        return 0.0

    @property
    def mean(self):
        return self.p / self.a

    def cdf(self, x):
        return _scalar_or_array(gammainc(self.p, self.a * _grid(x)))

    def _lattice(self, t, policy, n_terms):
        return _gamma_lattice(self.p, t / self.a, policy, n_terms)

    def scaled(self, c):
        return Gamma(self.a / c, self.p)

    def to_dict(self):
        return {"type": "gamma", "a": self.a, "p": self.p}


@dataclass(frozen=True)
class ErlangComponent:
    """Erlang law with rate ``a`` and integer shape ``j``, carrying mixture weight ``w``."""

    a: float
    j: int
    w: float

    def __post_init__(self):
        _positive(self.a, "component rate a")
        _require(is_integer(self.j) and self.j >= 1, "component shape j must be a positive integer")
        object.__setattr__(self, "j", int(self.j))
        _require(math.isfinite(self.w) and self.w >= 0, "component weight must be non-negative")

    def to_dict(self):
        return {"a": self.a, "j": self.j, "w": self.w}


@dataclass(frozen=True)
class ErlangMixture(DistributionSpec):
    """Atom ``zero_mass`` at 0 plus a weighted sum of Erlang components.

    Components are ordered by increasing rate, then shape.  ``truncated_mass``
    records probability dropped by a truncated expansion, so that
    ``zero_mass + sum(w) + truncated_mass == 1``.
    """

    zero_mass: float
    components: tuple
    truncated_mass: float = 0.0

    def __post_init__(self):
        comps = tuple(c if isinstance(c, ErlangComponent) else ErlangComponent(*c)
                      for c in self.components)
        object.__setattr__(self, "components", comps)
        self._check()

    def _check(self):
        _probability(self.zero_mass, "zero_mass")
        _require(self.truncated_mass >= 0, "truncated_mass must be non-negative")
        total = math.fsum([self.zero_mass, self.truncated_mass] + [c.w for c in self.components])
        _require(abs(total - 1.0) <= WEIGHT_TOL,
                 f"zero_mass + weights + truncated_mass must equal 1, got {total!r}")
        keys = [(c.a, c.j) for c in self.components]
        _require(all(k1 < k2 for k1, k2 in zip(keys, keys[1:])),
                 "components must be listed in strictly increasing (rate, shape) order")

    @property
    def mass_at_zero(self):
        return self.zero_mass

    @property
    def mean(self):
        return math.fsum(c.w * c.j / c.a for c in self.components)

    def cdf(self, x):
        arr = _grid(x)
        out = np.full(arr.shape, self.zero_mass)
        for c in self.components:
            out = out + c.w * gammainc(c.j, c.a * arr)
        return _scalar_or_array(out)

    def _lattice(self, t, policy, n_terms):
        parts = []
        for c in self.components:
            if c.w > 0:
                parts.append(c.w * _gamma_lattice(float(c.j), t / c.a, policy, n_terms))
        size = max([p.size for p in parts], default=1)
        out = np.zeros(size)
        for part in parts:
            out[: part.size] += part
        out[0] += self.zero_mass
        return out

    def scaled(self, c):
        return ErlangMixture(self.zero_mass,
                             tuple(ErlangComponent(k.a / c, k.j, k.w) for k in self.components),
                             self.truncated_mass)

    def to_dict(self):
        out = {"type": "erlang_mixture", "zero_mass": self.zero_mass,
               "components": [c.to_dict() for c in self.components]}
        if self.truncated_mass:
            out["truncated_mass"] = self.truncated_mass
        return out


@dataclass(frozen=True)
class PhaseType(DistributionSpec):
    rep: PhaseTypeRep

    def __post_init__(self):
        self._check()

    def _check(self):
        _require(isinstance(self.rep, PhaseTypeRep), "PhaseType needs a PhaseTypeRep")

    @property
    def mass_at_zero(self):
        return self.rep.mass_at_zero

    @property
    def mean(self):
        return float(self.rep.alpha @ np.linalg.solve(-self.rep.A, np.ones(self.rep.n)))

    def cdf(self, x):
        return ph_cdf(self.rep, x)

    def _lattice(self, t, policy, n_terms):
        return ph_lattice_masses(self.rep, t, policy.stop_tol, policy.k_max, n_terms)

    def scaled(self, c):
        return PhaseType(self.rep.scaled(c))

    def to_dict(self):
        return self.rep.to_dict()


def _compound_cdf(counting, summand, x):
    """P(sum_{i<=M} X_i <= x) for gamma-type summands, as a mixture of gamma CDFs."""
    if isinstance(summand, Exponential):
        rate, shape = summand.rate, 1.0
    elif isinstance(summand, Gamma):
        rate, shape = summand.a, summand.p
    else:
        raise ExactCDFUnavailable(
            f"exact CDF unavailable for a compound of {type(summand).__name__}")
    arr = _grid(x)
    weights = counting.pmf_until(1e-17)
    out = np.full(arr.shape, weights[0])
    for n in range(1, weights.size):
        out = out + weights[n] * gammainc(n * shape, rate * arr)
    return _scalar_or_array(np.clip(out, 0.0, 1.0))


@dataclass(frozen=True)
class Compound(DistributionSpec):
    """Random sum X_1 + ... + X_M of i.i.d. summands."""

    counting: CountingSpec
    summand: DistributionSpec

    def __post_init__(self):
        self._check()

    def _check(self):
        _require(isinstance(self.counting, CountingSpec), "counting must be a counting law")
        _require(isinstance(self.summand, DistributionSpec), "summand must be a distribution")
        _require(not isinstance(self.summand, (Compound, GeometricExpCompound)),
                 "compound of a compound is not supported (nesting depth must be <= 1)")

    @property
    def has_exact_cdf(self):
        return isinstance(self.summand, (Exponential, Gamma))

    @property
    def mass_at_zero(self):
        return float(self.counting.pgf(self.summand.mass_at_zero))

    @property
    def mean(self):
        return self.counting.mean * self.summand.mean

    def cdf(self, x):
        return _compound_cdf(self.counting, self.summand, x)

    def _lattice(self, t, policy, n_terms):
        inner = TruncationPolicy(tol=policy.tol * SUMMAND_TOL_FACTOR, k_max=policy.k_max)
        summand = self.summand.ls_pmf(t, inner, n_terms or None)
        return panjer_compound(self.counting, summand, policy, n_terms or None).masses.copy()

    def scaled(self, c):
        return Compound(self.counting, self.summand.scaled(c))

    def to_dict(self):
        return {"type": "compound", "counting": self.counting.to_dict(),
                "summand": self.summand.to_dict()}


@dataclass(frozen=True)
class GeometricExpCompound(DistributionSpec):
    """Geometric(p) sum of unit exponentials: F(x) = 1 - (1-p) exp(-p x).

    The law is an atom p at zero mixed with an exponential of rate p.
    """

    p: float

    def __post_init__(self):
        self._check()

    def _check(self):
        _probability(self.p, "p", open_low=True)

    @property
    def counting(self):
        return Geometric(self.p)

    @property
    def summand(self):
        return Exponential(1.0)

    @property
    def mass_at_zero(self):
        return self.p

    @property
    def mean(self):
        return (1.0 - self.p) / self.p

    def cdf(self, x):
        return _scalar_or_array(self.p - (1.0 - self.p) * np.expm1(-self.p * _grid(x)))

    def lattice_cumulative(self, t, k):
        """Closed form of the lattice CDF: 1 - (1-p) (t/(t+p))^(k+1)."""
        rho = t / (t + self.p)
        return 1.0 - (1.0 - self.p) * rho ** (np.asarray(k) + 1.0)

    def _lattice(self, t, policy, n_terms):
        q = 1.0 - self.p
        if q == 0.0:
            out = np.zeros(max(n_terms, 1))
            out[0] = 1.0
            return out
        rho = t / (t + self.p)
        if n_terms:
            size = n_terms
        else:
            # smallest K with q rho^K < tol
            size = max(1, math.ceil(math.log(policy.stop_tol / q) / math.log(rho)))
            if size > policy.k_max:
                raise TruncationError(f"lattice needs {size} atoms, above k_max={policy.k_max}")
        k = np.arange(size, dtype=np.float64)
        masses = q * (self.p / (t + self.p)) * rho ** k
        masses[0] = 1.0 - q * rho
        return masses

    def scaled(self, c):
        if c != 1:
            raise DomainError("a scaled geometric-exponential compound is not in this family; "
                              "use Compound(Geometric(p), Exponential(1/c))")
        return self

    def to_dict(self):
        return {"type": "geometric_exp_compound", "p": self.p}


# ---------------------------------------------------------------------------
# module-level API
# ---------------------------------------------------------------------------

def validate(spec):
    """Return ``spec`` if its invariants hold, else raise :class:`SpecError`."""
    if not isinstance(spec, DistributionSpec):
        raise SpecError(f"not a distribution spec: {spec!r}")
    spec._check()
    if isinstance(spec, Compound):
        validate(spec.summand)
    return spec


def cdf(spec, x):
    """Exact distribution function of ``spec`` at x."""
    return spec.cdf(x)


def ls_pmf(spec, t, policy=None, n_terms=None):
    """LS lattice pmf of ``spec`` at scale t."""
    return spec.ls_pmf(t, policy, n_terms)


def scale(spec, c):
    """Spec of c X."""
    if not c > 0:
        raise DomainError("scale factor must be positive")
    return spec.scaled(c)


def _get(d, key, kind):
    try:
        return d[key]
    except KeyError:
        raise SpecError(f"{kind} spec is missing field {key!r}") from None


def counting_from_dict(d):
    kind = d.get("type")
    try:
        if kind == "geometric":
            return Geometric(float(_get(d, "p", kind)))
        if kind == "poisson":
            return Poisson(float(d["lambda"] if "lambda" in d else _get(d, "lam", kind)))
        if kind == "negative_binomial":
            return NegativeBinomial(float(_get(d, "r", kind)), float(_get(d, "p", kind)))
        if kind == "binomial":
            return Binomial(_get(d, "n", kind), float(_get(d, "p", kind)))
        if kind == "finite_pmf":
            return FinitePMF(tuple(_get(d, "masses", kind)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"bad {kind} counting spec: {exc}") from exc
    raise SpecError(f"unknown counting type {kind!r}")


def spec_from_dict(d):
    """Build a validated spec from its JSON-style dictionary."""
    if not isinstance(d, dict):
        raise SpecError("spec must be a JSON object")
    kind = d.get("type")
    try:
        if kind == "exponential":
            return Exponential(float(_get(d, "rate", kind)))
        if kind == "gamma":
            return Gamma(float(_get(d, "a", kind)), float(_get(d, "p", kind)))
        if kind == "erlang_mixture":
            comps = tuple(ErlangComponent(float(_get(c, "a", "component")), _get(c, "j", "component"),
                                          float(_get(c, "w", "component")))
                          for c in _get(d, "components", kind))
            return ErlangMixture(float(d.get("zero_mass", 0.0)), comps,
                                 float(d.get("truncated_mass", 0.0)))
        if kind == "phase_type":
            return PhaseType(PhaseTypeRep(_get(d, "alpha", kind), _get(d, "A", kind)))
        if kind == "compound":
            return Compound(counting_from_dict(_get(d, "counting", kind)),
                            spec_from_dict(_get(d, "summand", kind)))
        if kind == "geometric_exp_compound":
            return GeometricExpCompound(float(_get(d, "p", kind)))
    except SpecError:
        raise
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad {kind} spec: {exc}") from exc
    raise SpecError(f"unknown distribution type {kind!r}")


def spec_to_dict(spec):
    return spec.to_dict()


def load_spec(source):
    """Parse a spec from a JSON string or a path to a JSON file."""
    text = str(source)
    path = Path(text)
    if not text.lstrip().startswith("{") and path.exists():
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"spec is not valid JSON: {exc}") from exc
    return spec_from_dict(data)
