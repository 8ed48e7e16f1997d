"""Numerical backend selection.

The hot inner loops (boundary residual forward/backward passes and field
evaluation) exist in two implementations: a numba @njit version and a pure
vectorized-numpy fallback.  The numba lane is used when numba imports
successfully, unless the environment variable ``HERGNET_NO_NUMBA`` is set to
a non-empty value.  Everything outside the kernels is plain numpy and shared
between the two lanes.

Results agree between lanes to ~1e-10 (the numba lane uses a polynomial
sin/cos with that accuracy); bit-level reproducibility is only guaranteed
within a single lane.
"""

import os

_disabled = bool(os.environ.get("HERGNET_NO_NUMBA", ""))

if _disabled:
    HAVE_NUMBA = False
else:
    try:
        import numba  # noqa: F401
        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def set_num_threads(n: int) -> None:
    """Limit worker threads in the numba lane (no-op for the numpy lane)."""
    if USE_NUMBA and n > 0:
        import numba
        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
