"""Serial inner loops behind the lattice constructions.

Every kernel exists twice: a loop version compiled with numba, and a numpy
version used when numba is disabled (see ``_accel``).  Both return the same
tuple layout; the public names at the bottom of the module point at whichever
backend is active.  ``status`` is 0 on success and 1 when ``k_max`` was reached
before the tail tolerance.
"""
import math

import numpy as np
import scipy.linalg

from ._accel import HAVE_NUMBA, NUMBA_ENABLED, njit

# log(1/DBL_MIN) is ~708; stay clear of it when starting a recurrence at k=0
_DIRECT_START_LIMIT = 700.0


# ---------------------------------------------------------------------------
# negative-binomial lattice (gamma LS discretization)
# ---------------------------------------------------------------------------

def _negbin_setup(shape, u, n_terms):
    r = u / (1.0 + u)
    log_q = -math.log1p(u)
    mode = int(math.floor((shape - 1.0) * u)) if shape > 1.0 else 0
    direct = shape * (-log_q) < _DIRECT_START_LIMIT
    if direct:
        k0 = 0
        start = math.exp(shape * log_q)
    else:
        k0 = mode if n_terms <= 0 else min(mode, n_terms - 1)
        start = math.exp(
            math.lgamma(shape + k0) - math.lgamma(shape) - math.lgamma(k0 + 1.0)
            + shape * log_q + k0 * math.log(r)
        )
    return r, mode, direct, k0, start


_negbin_setup_jit = njit(_negbin_setup)


def _negbin_loop(shape, u, tol, k_max, n_terms):
    r, mode, direct, k0, start = _negbin_setup_jit(shape, u, n_terms)
    fixed = n_terms > 0
    cap = n_terms if fixed else k_max
    if k0 >= cap:
        return np.zeros(0), 1.0, 1, direct
    mean = shape * u
    sd = math.sqrt(shape * u * (1.0 + u))
    size = int(min(cap, max(k0 + 64.0, mean + 12.0 * sd + 64.0)))
    buf = np.zeros(size)
    buf[k0] = start
    for k in range(k0, 0, -1):
        buf[k - 1] = buf[k] * (k / ((shape + k - 1.0) * r))
    k = k0
    bound = 0.0
    status = 0
    while True:
        rho = (shape + k) / (k + 1.0) * r
        if fixed:
            if k + 1 >= n_terms:
                break
        elif k >= mode:
            rho_sup = rho if shape >= 1.0 else r
            bound = buf[k] * rho_sup / (1.0 - rho_sup)
            if bound < tol:
                break
        if k + 1 >= cap:
            status = 0 if fixed else 1
            break
        if k + 1 >= buf.shape[0]:
            grown = np.zeros(min(cap, 2 * buf.shape[0]))
            grown[: buf.shape[0]] = buf
            buf = grown
        buf[k + 1] = buf[k] * rho
        k += 1
    return buf[: k + 1].copy(), bound, status, direct


def _negbin_numpy(shape, u, tol, k_max, n_terms):
    r, mode, direct, k0, start = _negbin_setup(shape, u, n_terms)
    fixed = n_terms > 0
    cap = n_terms if fixed else k_max
    if k0 >= cap:
        return np.zeros(0), 1.0, 1, direct
    if k0 > 0:
        kd = np.arange(k0, 0, -1, dtype=np.float64)
        down = np.cumprod(np.concatenate(([start], kd / ((shape + kd - 1.0) * r))))
        head = down[::-1][:-1]
    else:
        head = np.zeros(0)
    mean = shape * u
    sd = math.sqrt(shape * u * (1.0 + u))
    hi = int(min(cap, max(k0 + 64.0, mean + 12.0 * sd + 64.0)))
    while True:
        ks = np.arange(k0, hi, dtype=np.float64)
        rho = (shape + ks) / (ks + 1.0) * r
        up = np.cumprod(np.concatenate(([start], rho[:-1])))
        if fixed:
            if hi >= n_terms:
                return np.concatenate((head, up[: n_terms - k0])), 0.0, 0, direct
        else:
            rho_sup = rho if shape >= 1.0 else np.full_like(rho, r)
            with np.errstate(divide="ignore", invalid="ignore"):
                # only meaningful past the mode, where rho < 1
                bound = up * rho_sup / (1.0 - rho_sup)
            ok = (ks >= mode) & (bound < tol)
            hit = np.flatnonzero(ok)
            if hit.size:
                stop = hit[0]
                return np.concatenate((head, up[: stop + 1])), float(bound[stop]), 0, direct
            if hi >= cap:
                last = up.size - 1
                return np.concatenate((head, up)), float(bound[last]), 1, direct
        hi = int(min(cap, 2 * hi))


# ---------------------------------------------------------------------------
# Panjer (a, b, 0) recursion
# ---------------------------------------------------------------------------

def _panjer_loop(f, a, b, g0, target, tol, k_max, n_terms):
    fixed = n_terms > 0
    cap = n_terms if fixed else k_max
    denom = 1.0 - a * f[0]
    size = int(min(cap, max(64, 4 * f.shape[0])))
    buf = np.zeros(size)
    buf[0] = g0
    s = g0
    comp = 0.0
    k = 0
    status = 0
    nf = f.shape[0]
    while True:
        if fixed:
            if k + 1 >= n_terms:
                break
        elif target - (s + comp) < tol:
            break
        if k + 1 >= cap:
            status = 0 if fixed else 1
            break
        k += 1
        if k >= buf.shape[0]:
            grown = np.zeros(min(cap, 2 * buf.shape[0]))
            grown[: buf.shape[0]] = buf
            buf = grown
        jmax = k if k < nf - 1 else nf - 1
        acc = 0.0
        for j in range(1, jmax + 1):
            acc += (a + b * j / k) * f[j] * buf[k - j]
        v = acc / denom
        buf[k] = v
        tmp = s + v
        if abs(s) >= abs(v):
            comp += (s - tmp) + v
        else:
            comp += (v - tmp) + s
        s = tmp
    return buf[: k + 1].copy(), status


def _panjer_numpy(f, a, b, g0, target, tol, k_max, n_terms):
    fixed = n_terms > 0
    cap = n_terms if fixed else k_max
    denom = 1.0 - a * f[0]
    nf = f.shape[0]
    buf = np.zeros(int(min(cap, max(64, 4 * nf))))
    buf[0] = g0
    parts = [g0]
    k = 0
    jidx = np.arange(1, nf, dtype=np.float64)
    while True:
        if fixed:
            if k + 1 >= n_terms:
                break
        elif target - math.fsum(parts) < tol:
            break
        if k + 1 >= cap:
            return buf[: k + 1].copy(), 0 if fixed else 1
        k += 1
        if k >= buf.shape[0]:
            buf = np.concatenate((buf, np.zeros(min(cap, 2 * buf.shape[0]) - buf.shape[0])))
        jmax = min(k, nf - 1)
        coef = (a + b * jidx[:jmax] / k) * f[1 : jmax + 1]
        v = float(np.dot(coef, buf[k - 1 :: -1][:jmax])) / denom if jmax else 0.0
        buf[k] = v
        parts.append(v)
        # fsum over a growing list is quadratic; fold it back periodically
        if len(parts) > 256:
            parts = [math.fsum(parts)]
    return buf[: k + 1].copy(), 0


# ---------------------------------------------------------------------------
# resolvent iteration for phase-type lattices
# ---------------------------------------------------------------------------

def _lu_solve_inplace(lu, piv, x):
    n = x.shape[0]
    for i in range(n):
        p = piv[i]
        if p != i:
            tmp = x[i]
            x[i] = x[p]
            x[p] = tmp
    for i in range(n):
        acc = x[i]
        for j in range(i):
            acc -= lu[i, j] * x[j]
        x[i] = acc
    for i in range(n - 1, -1, -1):
        acc = x[i]
        for j in range(i + 1, n):
            acc -= lu[i, j] * x[j]
        x[i] = acc / lu[i, i]


_lu_solve_inplace_jit = njit(_lu_solve_inplace)


def _resolvent_loop(lu, piv, w0, s, t, tol, k_max, n_terms):
    """d_k = w_k . s with w_{k+1} = t * solve(lu, w_k); tail after k is sum(w_{k+1})."""
    fixed = n_terms > 0
    cap = n_terms if fixed else k_max
    size = int(min(cap, 256))
    buf = np.zeros(size)
    w = w0.copy()
    n = w.shape[0]
    k = 0
    tail = 0.0
    status = 0
    while True:
        if k >= buf.shape[0]:
            grown = np.zeros(min(cap, 2 * buf.shape[0]))
            grown[: buf.shape[0]] = buf
            buf = grown
        acc = 0.0
        for i in range(n):
            acc += w[i] * s[i]
        buf[k] = acc
        _lu_solve_inplace_jit(lu, piv, w)
        tail = 0.0
        for i in range(n):
            w[i] *= t
            tail += w[i]
        if fixed:
            if k + 1 >= n_terms:
                break
        elif tail < tol:
            break
        if k + 1 >= cap:
            status = 1
            break
        k += 1
    return buf[: k + 1].copy(), tail, status


def _resolvent_numpy(lu, piv, w0, s, t, tol, k_max, n_terms):
    fixed = n_terms > 0
    cap = n_terms if fixed else k_max
    out = []
    w = w0.copy()
    status = 0
    while True:
        out.append(float(w @ s))
        w = t * scipy.linalg.lu_solve((lu, piv), w, check_finite=False)
        tail = float(w.sum())
        if fixed:
            if len(out) >= n_terms:
                break
        elif tail < tol:
            break
        if len(out) >= cap:
            status = 1
            break
    return np.array(out), tail, status


# ---------------------------------------------------------------------------
# row-vector power sequence  out[n, c] = row . P^n . cols[:, c]
# ---------------------------------------------------------------------------

def _power_loop(P, row, cols, n_terms, stop_col, tol):
    m = P.shape[0]
    nc = cols.shape[1]
    out = np.zeros((n_terms, nc))
    r = row.copy()
    nxt = np.zeros(m)
    used = n_terms
    for n in range(n_terms):
        for c in range(nc):
            acc = 0.0
            for i in range(m):
                acc += r[i] * cols[i, c]
            out[n, c] = acc
        if stop_col >= 0 and out[n, stop_col] < tol:
            used = n + 1
            break
        for j in range(m):
            nxt[j] = 0.0
        for i in range(m):
            ri = r[i]
            if ri != 0.0:
                for j in range(m):
                    nxt[j] += ri * P[i, j]
        for j in range(m):
            r[j] = nxt[j]
    return out[:used].copy()


def _power_numpy(P, row, cols, n_terms, stop_col, tol):
    out = np.zeros((n_terms, cols.shape[1]))
    r = row.copy()
    for n in range(n_terms):
        out[n] = r @ cols
        if stop_col >= 0 and out[n, stop_col] < tol:
            return out[: n + 1].copy()
        r = r @ P
    return out


# ---------------------------------------------------------------------------

numpy_impl = {
    "negbin_lattice": _negbin_numpy,
    "panjer_ab0": _panjer_numpy,
    "resolvent_lattice": _resolvent_numpy,
    "row_power_sequence": _power_numpy,
}

if HAVE_NUMBA:
    numba_impl = {
        "negbin_lattice": njit(_negbin_loop),
        "panjer_ab0": njit(_panjer_loop),
        "resolvent_lattice": njit(_resolvent_loop),
        "row_power_sequence": njit(_power_loop),
    }
else:  # pragma: no cover
    numba_impl = {}

_active = numba_impl if NUMBA_ENABLED else numpy_impl


def negbin_lattice(shape, u, tol, k_max, n_terms=0):
    """Lattice masses of a gamma(shape) variable at grid scale ``u = t / rate``.

    Returns ``(masses, tail_bound, status, direct)``; ``direct`` is False when
    the recurrence had to start from the mode to avoid underflow of d_0.
    """
    return _active["negbin_lattice"](float(shape), float(u), float(tol), int(k_max), int(n_terms))


def panjer_ab0(f, a, b, g0, target, tol, k_max, n_terms=0):
    """Compound pmf for an (a, b, 0) counting law.  Returns ``(masses, status)``."""
    f = np.ascontiguousarray(f, dtype=np.float64)
    return _active["panjer_ab0"](f, float(a), float(b), float(g0), float(target),
                                 float(tol), int(k_max), int(n_terms))


def resolvent_lattice(lu, piv, w0, s, t, tol, k_max, n_terms=0):
    """Phase-type lattice masses by repeated solves.  Returns ``(masses, tail, status)``."""
    return _active["resolvent_lattice"](
        np.ascontiguousarray(lu), np.ascontiguousarray(piv, dtype=np.int64),
        np.ascontiguousarray(w0, dtype=np.float64), np.ascontiguousarray(s, dtype=np.float64),
        float(t), float(tol), int(k_max), int(n_terms))


def row_power_sequence(P, row, cols, n_terms, stop_col=-1, tol=0.0):
    """Table of ``row @ P^n @ cols`` for n < n_terms, optionally stopping early."""
    return _active["row_power_sequence"](
        np.ascontiguousarray(P, dtype=np.float64), np.ascontiguousarray(row, dtype=np.float64),
        np.ascontiguousarray(cols, dtype=np.float64), int(n_terms), int(stop_col), float(tol))
