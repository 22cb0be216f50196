"""Optional numba acceleration.

Set ``ODDM_DISABLE_NUMBA=1`` before import to force the pure-numpy kernels.
"""

import os


def _noop_jit(*args, **kwargs):
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f


def _have_numba():
    try:
        import numba  # noqa: F401

        return True
    except ImportError:
        return False


HAVE_NUMBA = _have_numba()
USE_NUMBA = HAVE_NUMBA and os.environ.get("ODDM_DISABLE_NUMBA", "").strip().lower() not in (
    "1",
    "true",
    "yes",
)

if HAVE_NUMBA:
    from numba import njit
else:
    njit = _noop_jit


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
