"""Numba switch.

Set ``QPLASMON_DISABLE_NUMBA=1`` before import to force the pure-numpy
kernels. If numba is missing the numpy path is used automatically.
"""
import os
import warnings

_FLAG = "QPLASMON_DISABLE_NUMBA"


def _env_disabled():
    return os.environ.get(_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba ships with the default install
    HAVE_NUMBA = False
    njit = None
    warnings.warn("numba not importable, falling back to numpy kernels")

USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def jit(func):
    """``njit(cache=True)`` when numba is importable, else return ``func`` as is."""
    if not HAVE_NUMBA:
        return func
    return njit(cache=True)(func)
