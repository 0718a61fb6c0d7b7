"""Backend selection for the compiled kernels.

Set ``LSAPPROX_DISABLE_NUMBA=1`` in the environment before import to force
the pure-numpy path (numba is also skipped when it is not installed).
"""
import os

_FLAG = os.environ.get("LSAPPROX_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba ships with the dev environment
    numba = None

HAVE_NUMBA = numba is not None
NUMBA_ENABLED = HAVE_NUMBA and _FLAG not in {"1", "true", "yes", "on"}
BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is importable, else return it unchanged."""
    if not HAVE_NUMBA:
        return fn
    return numba.njit(cache=True)(fn)
