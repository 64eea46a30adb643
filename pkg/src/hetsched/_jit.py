"""Numba switch.

Kernels in :mod:`hetsched._kernels` are written in the numba-compatible
subset of Python.  They are compiled with ``numba.njit`` unless numba is
missing or ``HETSCHED_DISABLE_NUMBA`` is set to a truthy value, in which
case the same functions run as plain numpy/Python.
"""

import os

_FLAG = os.environ.get("HETSCHED_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

NUMBA_ENABLED = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def njit(func=None, **options):
    if not NUMBA_ENABLED:
        if func is None:
            return lambda f: f
        return func
    options.setdefault("cache", True)
    if func is None:
        return numba.njit(**options)
    return numba.njit(**options)(func)
