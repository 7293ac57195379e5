"""Numba switch.

Kernels in :mod:`mmtk._kernels` are written as plain loops over numpy arrays.
When numba is importable and ``MMTK_DISABLE_NUMBA`` is unset they are compiled
with ``numba.njit``; otherwise the same source runs as ordinary Python.  Either
way the uncompiled function is reachable as ``kernel.py_func``.
"""
import os

_FLAG = os.environ.get("MMTK_DISABLE_NUMBA", "").strip().lower()
NUMBA_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

NUMBA_AVAILABLE = numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not NUMBA_DISABLED


def jit(func):
    if USE_NUMBA:
        return numba.njit(cache=True)(func)
    func.py_func = func
    return func


def backend():
    return "numba" if USE_NUMBA else "python"


def default_budget():
    """Node budget for exact searches; ``MMTK_BUDGET`` overrides."""
    raw = os.environ.get("MMTK_BUDGET")
    if raw:
        return int(float(raw))
    return 2_000_000
