"""Numba acceleration switch.

Hot numeric kernels live in :mod:`gpbench._kernels` and are written in
nopython-compatible style.  By default they are compiled with numba; setting
the environment variable ``GPBENCH_NO_NUMBA=1`` before import selects the
pure-numpy/python fallback path instead (same functions, uncompiled, plus
vectorized numpy variants where a loop would be prohibitively slow).
"""

import os

NUMBA_ENABLED = os.environ.get("GPBENCH_NO_NUMBA", "0") not in ("1", "true", "yes")

if NUMBA_ENABLED:
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def jit(func):
    """Compile ``func`` with numba when enabled, otherwise return it as-is."""
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func
