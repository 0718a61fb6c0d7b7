"""Phase-type distributions: CDF by uniformization, lattice pmf by resolvent
solves, and expansion into an Erlang mixture with a single rate."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from scipy.stats import poisson

from . import _kernels
from .discretization import DEFAULT_POLICY, LatticePMF, Provenance, clean_masses
from .errors import DomainError, MaierPositivityError, SpecError, TruncationError

STRUCTURE_TOL = 1e-12
POISSON_CUT = 1e-14


@dataclass(frozen=True, eq=False)
class PhaseTypeRep:
    """Initial vector ``alpha`` and sub-generator ``A`` of an absorbing Markov chain.

    The distribution has an atom ``1 - sum(alpha)`` at zero and survival
    function ``alpha @ expm(x A) @ 1``.
    """

    alpha: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=np.float64, ndmin=1)
        A = np.array(self.A, dtype=np.float64, ndmin=2)
        n = alpha.size
        if alpha.ndim != 1 or A.shape != (n, n):
            raise SpecError(f"A must be {n}x{n} to match alpha")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(A))):
            raise SpecError("alpha and A must be finite")
        if np.any(alpha < 0):
            raise SpecError("alpha entries must be non-negative")
        total = math.fsum(alpha)
        if not (0 < total <= 1 + STRUCTURE_TOL):
            raise SpecError("sum(alpha) must lie in (0, 1]")
        diag = np.diag(A)
        if np.any(diag >= 0):
            raise SpecError("diagonal of A must be strictly negative")
        off = A - np.diag(diag)
        if np.any(off < 0):
            raise SpecError("off-diagonal entries of A must be non-negative")
        if np.any(A.sum(axis=1) > STRUCTURE_TOL):
            raise SpecError("row sums of A must be non-positive")
        # absorption must be reachable from every phase, otherwise A is singular
        try:
            mean_times = scipy.linalg.solve(-A, np.ones(n))
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise SpecError("A is singular: some phase never reaches absorption") from exc
        if not np.all(np.isfinite(mean_times)) or np.any(mean_times <= 0):
            raise SpecError("A is singular: some phase never reaches absorption")
        alpha.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "A", A)

    @property
    def n(self):
        return self.alpha.size

    @property
    def mass_at_zero(self):
        return max(0.0, 1.0 - math.fsum(self.alpha))

    @property
    def exit_vector(self):
        """Absorption rates -A 1'."""
        return -self.A.sum(axis=1)

    def scaled(self, c):
        """Representation of c X."""
        return PhaseTypeRep(self.alpha.copy(), self.A / c)

    def to_dict(self):
        return {"type": "phase_type", "alpha": self.alpha.tolist(), "A": self.A.tolist()}


def _uniformization(rep):
    lam = float(np.max(-np.diag(rep.A)))
    P = np.eye(rep.n) + rep.A / lam
    return lam, P


def _poisson_terms(mu_max):
    return int(poisson.isf(POISSON_CUT, mu_max)) + 2 if mu_max > 0 else 1


def _as_grid(x):
    arr = np.asarray(x, dtype=np.float64)
    if np.any(~(arr >= 0)):
        raise DomainError("x must be non-negative")
    return arr


def ph_cdf(rep, x):
    """1 - alpha expm(xA) 1' by uniformization (scalar or array x)."""
    arr = _as_grid(x)
    flat = arr.ravel()
    lam, P = _uniformization(rep)
    n_terms = _poisson_terms(lam * float(flat.max(initial=0.0)))
    surv = _kernels.row_power_sequence(P, rep.alpha, np.ones((rep.n, 1)), n_terms)[:, 0]
    n = np.arange(n_terms)
    out = np.empty(flat.size)
    # keep the Poisson weight block at a few million entries
    step = max(1, 4_000_000 // n_terms)
    for lo in range(0, flat.size, step):
        weights = poisson.pmf(n[None, :], lam * flat[lo:lo + step, None])
        out[lo:lo + step] = 1.0 - weights @ surv
    out = np.clip(out, 0.0, 1.0).reshape(arr.shape)
    return float(out) if out.ndim == 0 else out


def ph_state(rep, x):
    """Transient row vector alpha expm(xA) and the probability absorbed by time x.

    The absorbed part is accumulated separately from the exit flow, so
    ``transient.sum() + absorbed == sum(alpha)`` is a genuine conservation check.
    """
    x = float(_as_grid(x))
    lam, P = _uniformization(rep)
    n_terms = _poisson_terms(lam * x)
    cols = np.column_stack([np.eye(rep.n), rep.exit_vector / lam])
    table = _kernels.row_power_sequence(P, rep.alpha, cols, n_terms)
    n = np.arange(n_terms)
    transient = poisson.pmf(n, lam * x) @ table[:, : rep.n]
    absorbed = math.fsum(poisson.sf(n, lam * x) * table[:, rep.n])
    return transient, absorbed


def ph_lattice_masses(rep, t, tol, k_max, n_terms=0):
    """Lattice masses d_k(t) from one LU factorization of (tI - A)."""
    if not t > 0:
        raise DomainError("t must be positive")
    t = float(t)
    M = t * np.eye(rep.n) - rep.A
    try:
        lu, piv = scipy.linalg.lu_factor(M.T, check_finite=False)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - excluded by validation
        raise SpecError("tI - A is singular") from exc
    s = scipy.linalg.lu_solve((lu, piv), rep.exit_vector, trans=1, check_finite=False)
    masses, tail, status = _kernels.resolvent_lattice(lu, piv, rep.alpha, s, t, tol, k_max, n_terms)
    if status:
        raise TruncationError(f"phase-type lattice tail {tail:.3e} above {tol:g} at k_max={k_max}")
    masses = clean_masses(masses)
    masses[0] += rep.mass_at_zero
    return masses


def ph_ls_pmf(rep, t, policy=None, n_terms=None):
    """LS lattice pmf of a phase-type distribution at scale t."""
    policy = policy or DEFAULT_POLICY
    masses = ph_lattice_masses(rep, t, policy.stop_tol, policy.k_max, n_terms or 0)
    return LatticePMF.from_masses(t, masses, Provenance.LS_DISCRETIZATION)


def default_maier_rate(rep):
    """Largest absolute entry of A, which always makes cI + A non-negative."""
    return float(np.max(np.abs(rep.A)))


def _positivity_floor(rep, c, j):
    """Tolerance -1e-12 ||A||^j, expressed for the rescaled sequence q_j = c_j / c^(j+1)."""
    norm = default_maier_rate(rep)
    return -1e-12 * math.exp(j * math.log(norm) - (j + 1) * math.log(c))


def _check_positive(rep, c, q, offset=0):
    for j, value in enumerate(q):
        if value < 0 and value < _positivity_floor(rep, c, j + offset):
            raise MaierPositivityError(
                f"coefficient c_{j + offset} is negative for c={c:g}; try a larger c")


def maier_coefficients(rep, c, j_max):
    """c_j = d^j/dx^j [exp(cx) f(x)] at 0 for j = 0..j_max, f the normalized density.

    Computed as c^(j+1) abar (I + A/c)^j (-A 1'/c) with abar = alpha / sum(alpha).
    """
    if not c > 0:
        raise DomainError("c must be positive")
    if j_max < 0:
        raise DomainError("j_max must be non-negative")
    c = float(c)
    abar = rep.alpha / math.fsum(rep.alpha)
    M = np.eye(rep.n) + rep.A / c
    q = _kernels.row_power_sequence(M, abar, (rep.exit_vector / c)[:, None], int(j_max) + 1)[:, 0]
    _check_positive(rep, c, q)
    q = np.where(q < 0, 0.0, q)
    with np.errstate(over="ignore"):
        return q * c ** np.arange(1, q.size + 1, dtype=np.float64)


def maier_expand(rep, c=None, epsilon=1e-10, j_max=10 ** 6):
    """Rewrite a phase-type law as a zero atom plus Erlang(j, rate c) components.

    Components are added until the remaining probability falls below
    ``epsilon``; what is left is recorded as ``truncated_mass``.
    """
    from .distributions import ErlangComponent, ErlangMixture

    c = default_maier_rate(rep) if c is None else float(c)
    if not c > 0:
        raise DomainError("c must be positive")
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    M = np.eye(rep.n) + rep.A / c
    cols = np.column_stack([rep.exit_vector / c, np.ones(rep.n)])
    table = _kernels.row_power_sequence(M, rep.alpha, cols, int(j_max) + 1, stop_col=1, tol=epsilon)
    alpha_mass = math.fsum(rep.alpha)
    # a negative coefficient can also drive the remaining mass below epsilon early
    _check_positive(rep, c, table[:, 0] / alpha_mass)
    remaining = table[-1, 1]
    if remaining < -STRUCTURE_TOL:
        raise MaierPositivityError(f"remaining mass {remaining:.3e} is negative for c={c:g}; try a larger c")
    if remaining >= epsilon:
        raise TruncationError(f"remaining mass {remaining:.3e} after j_max={j_max} components")
    weights = table[:-1, 0]
    weights = np.where(weights < 0, 0.0, weights)
    p0 = rep.mass_at_zero
    components = tuple(ErlangComponent(a=c, j=j + 1, w=float(w))
                       for j, w in enumerate(weights) if w > 0)
    truncated = max(0.0, 1.0 - p0 - math.fsum(weights))
    return ErlangMixture(zero_mass=p0, components=components, truncated_mass=truncated)
