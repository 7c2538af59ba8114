"""Numba availability and the switch between compiled and pure-numpy kernels.

Set ``LCVT_DISABLE_NUMBA=1`` before importing :mod:`lcvt` to force the
pure-numpy code paths. When numba is not installed the fallback is used
automatically.
"""

import os

_FLAG = os.environ.get("LCVT_DISABLE_NUMBA", "").strip().lower()
_DISABLED = _FLAG not in ("", "0", "false", "no")

try:
    import numba

    NUMBA_INSTALLED = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_INSTALLED = False

USE_NUMBA = NUMBA_INSTALLED and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` with nogil+cache defaults; identity when numba is off.

    Compiled kernels are always built when numba is installed so that the
    benchmark can compare both paths in one process; ``USE_NUMBA`` only
    decides which path the dispatchers pick.
    """
    kwargs.setdefault("nogil", True)
    kwargs.setdefault("cache", True)

    if not NUMBA_INSTALLED:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)
