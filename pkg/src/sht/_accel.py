"""Backend switch for the compiled kernels.

Set ``SHT_DISABLE_NUMBA=1`` before import to force the pure-numpy paths.
Both paths stay importable so tests and the benchmark can compare them.
"""

import os

_disabled = os.environ.get("SHT_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _disabled


def njit(*args, **kwargs):
    """``numba.njit`` with caching on; identity decorator without numba."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)
    if not HAVE_NUMBA:
        if args and callable(args[0]):
            return args[0]
        return lambda f: f
    return numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
