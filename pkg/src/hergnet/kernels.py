"""Hot-kernel dispatch: numba lane when available, numpy lane otherwise.

See hergnet.backend for the selection rule (HERGNET_NO_NUMBA env flag).
"""

from .backend import USE_NUMBA

if USE_NUMBA:
    from ._kernels_numba import boundary_forward, boundary_backward, field_eval
else:
    from ._kernels_numpy import boundary_forward, boundary_backward, field_eval

__all__ = ["boundary_forward", "boundary_backward", "field_eval"]
