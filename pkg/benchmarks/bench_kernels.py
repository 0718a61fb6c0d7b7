"""Time the numba and numpy implementations of each lattice kernel side by side.

Run with ``python3 benchmarks/bench_kernels.py [--repeat N]``.  Each case is
run once on both backends to compile and to check that the outputs agree,
then timed; the table reports the median of ``--repeat`` runs.
"""
import argparse
import statistics
import time

import numpy as np
import scipy.linalg

from lsapprox import _kernels
from lsapprox.distributions import Exponential


def _cases():
    f = Exponential(1.0).ls_pmf(50.0).masses.copy()
    n = 40
    rng = np.random.default_rng(7)
    A = rng.uniform(0.0, 1.0, (n, n))
    np.fill_diagonal(A, 0.0)
    np.fill_diagonal(A, -(A.sum(axis=1) + 0.5))
    alpha = np.full(n, 1.0 / n)
    t = 20.0
    lu, piv = scipy.linalg.lu_factor((t * np.eye(n) - A).T)
    s = scipy.linalg.lu_solve((lu, piv), -A.sum(axis=1), trans=1)
    lam = float(np.max(-np.diag(A)))
    P = np.eye(n) + A / lam
    cols = np.column_stack([np.ones(n), -A.sum(axis=1) / lam])
    return {
        "negbin_lattice shape=5 u=200": ("negbin_lattice", (5.0, 200.0, 1e-12, 1 << 24, 0)),
        "negbin_lattice shape=400 u=500": ("negbin_lattice", (400.0, 500.0, 1e-12, 1 << 24, 0)),
        "panjer_ab0 geometric p=0.01": ("panjer_ab0", (f, 0.99, 0.0, 0.01 / (1 - 0.99 * f[0]),
                                                       0.01 / (1 - 0.99 * f.sum()), 1e-12, 1 << 24, 0)),
        "resolvent_lattice n=40": ("resolvent_lattice", (lu, piv.astype(np.int64), alpha, s, t, 1e-12, 1 << 24, 0)),
        "row_power_sequence n=40 x2000": ("row_power_sequence", (P, alpha, cols, 2000, -1, 0.0)),
    }


def _first_array(out):
    return out[0] if isinstance(out, tuple) else out


def _time(fn, args, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if not _kernels.numba_impl:
        raise SystemExit("numba is not installed; nothing to compare")
    print(f"{'case':34s} {'numba [ms]':>11s} {'numpy [ms]':>11s} {'speedup':>8s} {'max |diff|':>11s} {'len':>13s}")
    for label, (name, call) in _cases().items():
        fast, slow = _kernels.numba_impl[name], _kernels.numpy_impl[name]
        a, b = _first_array(fast(*call)), _first_array(slow(*call))
        # summation order differs, so a tail-controlled stop can land a few indices apart
        m = min(a.shape[0], b.shape[0])
        diff = float(np.max(np.abs(a[:m] - b[:m])))
        t_fast = _time(fast, call, args.repeat)
        t_slow = _time(slow, call, args.repeat)
        print(f"{label:34s} {1e3 * t_fast:11.3f} {1e3 * t_slow:11.3f} {t_slow / t_fast:8.1f} {diff:11.2e} {a.shape[0]:>6d}/{b.shape[0]:<6d}")


if __name__ == "__main__":
    main()
