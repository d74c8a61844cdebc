"""Backend switch for the hot kernels.

Set ``COVNS_DISABLE_NUMBA=1`` before importing :mod:`covns` to run every
kernel through the pure-numpy path. When numba is not installed the numpy
path is used automatically.
"""

import os

_FLAG = os.environ.get("COVNS_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _FLAG not in ("", "0", "false", "no")

try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
USE_NUMBA = NUMBA_AVAILABLE and not DISABLED_BY_ENV


def njit(func):
    """Compile ``func`` in nopython mode, caching to disk."""
    if not NUMBA_AVAILABLE:
        raise RuntimeError("numba is not installed")
    return _numba.njit(cache=True, nogil=True)(func)
