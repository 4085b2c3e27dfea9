"""Backend selection for the compiled kernels.

Set ``COMPTON_POVM_BACKEND=numpy`` to force the pure-numpy code paths even
when numba is importable. Any other value (or unset) prefers numba.
"""
import os

_requested = os.environ.get("COMPTON_POVM_BACKEND", "numba").strip().lower()

try:
    from numba import njit as _numba_njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba_njit = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and _requested != "numpy"
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise.

    The compiled function is always built when numba is installed so that
    tests and benchmarks can compare both paths regardless of the flag.
    """
    if HAVE_NUMBA:
        return _numba_njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
