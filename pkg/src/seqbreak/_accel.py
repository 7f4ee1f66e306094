"""Numba switch for the hot kernels.

Every kernel in :mod:`seqbreak._kernels` exists twice: a loop version compiled
with ``numba.njit`` and a vectorised pure-numpy version. ``SEQBREAK_DISABLE_NUMBA=1``
(read once at import) or a failed numba import selects the numpy versions.
"""
from __future__ import annotations

import os

_FLAG = os.environ.get("SEQBREAK_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG in ("1", "true", "yes", "on")

try:
    if _DISABLED:
        raise ImportError("disabled by SEQBREAK_DISABLE_NUMBA")
    import numba

    NUMBA_ENABLED = True
except ImportError:
    numba = None
    NUMBA_ENABLED = False


def njit(func):
    """Compile ``func`` in nopython mode when numba is active.

    When numba is off the function is returned untouched; callers must not
    dispatch to it in that case (the numpy twin is used instead).
    """
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def use_numba(override: bool | None = None) -> bool:
    """Resolve the backend for one call; ``override`` forces a choice."""
    if override is None:
        return NUMBA_ENABLED
    if override and not NUMBA_ENABLED:
        raise RuntimeError("numba backend requested but numba is disabled or missing")
    return override
