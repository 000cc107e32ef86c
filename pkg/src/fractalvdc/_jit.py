"""JIT switch.

Hot kernels are written twice: a numba ``@njit`` loop and a vectorised numpy
path. Setting ``FRACTALVDC_DISABLE_JIT=1`` (or running without numba) selects
the numpy path everywhere.
"""

import os
import warnings

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

DISABLE_JIT = os.environ.get("FRACTALVDC_DISABLE_JIT", "0").lower() in ("1", "true", "yes")
HAVE_NUMBA = numba is not None
USE_JIT = HAVE_NUMBA and not DISABLE_JIT


def njit(*args, **kwargs):
    """``numba.njit`` with ``cache=True``; identity when numba is absent."""
    if not HAVE_NUMBA:
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f
    kwargs.setdefault("cache", True)
    return numba.njit(*args, **kwargs)


def set_threads(n):
    """Cap numba worker threads; ``0`` keeps the default."""
    if HAVE_NUMBA and n:
        with warnings.catch_warnings():
            # threading-layer probing warns about old TBB builds; the fallback layer is fine
            warnings.simplefilter("ignore")
            numba.set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))


def backend_name():
    return "numba" if USE_JIT else "numpy"
