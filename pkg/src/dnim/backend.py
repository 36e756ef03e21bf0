"""Kernel backend selection.

Hot simulation loops are compiled with numba when available. Setting
``DNIM_BACKEND=numpy`` forces the pure-numpy fallback (same source, run
uncompiled); ``DNIM_BACKEND=numba`` demands the compiled path and fails
loudly if numba is missing. Both paths are bit-identical by construction
(integer interval arithmetic, counter-based RNG keyed per edge).
"""

from __future__ import annotations

import functools
import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dep, but stay usable
    numba = None
    HAS_NUMBA = False

_requested = os.environ.get("DNIM_BACKEND", "").strip().lower()
if _requested in ("numpy", "python"):
    USE_NUMBA = False
elif _requested in ("numba", "jit"):
    if not HAS_NUMBA:
        raise RuntimeError("DNIM_BACKEND=numba but numba is not importable")
    USE_NUMBA = True
else:
    USE_NUMBA = HAS_NUMBA


def py_fallback(fn):
    """Wrap an uncompiled kernel so uint64 wrap-around does not warn."""

    @functools.wraps(fn)
    def wrapper(*args):
        with np.errstate(over="ignore"):
            return fn(*args)

    return wrapper


def jit_kernel(fn):
    """Compile ``fn`` when the numba backend is active, else run it as-is.

    nogil lets replication chunks run on a thread pool; cache avoids
    recompiling across processes.
    """
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return py_fallback(fn)


def compile_kernel(fn):
    """Always-compiled variant (used by the benchmark); None without numba."""
    if HAS_NUMBA:
        return numba.njit(cache=True, nogil=True)(fn)
    return None


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
