"""Helmholtz solver that learns plane-wave superpositions from impedance
boundary conditions, with an analytic modal reference for shoebox rooms."""

from .backend import USE_NUMBA, backend_name
from .geometry import (PhysicalConfig, ShoeboxDomain, absorption_coefficient,
                       make_config, quad_count, sample_boundary,
                       training_point_count)
from .model import (HergNetParams, init_params, load_params, param_count,
                    save_params, total_field, total_field_batch)
from .oracle import (ModeTable, build_mode_table, fd_reference, modal_green,
                     modal_green_batch)
from .spectral import (TransferFunction, error_metrics, impulse_response, spl,
                       sweep, unwrap_phase)
from .training import TrainConfig, TrainReport, gradcheck, loss, train

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "backend_name",
    "PhysicalConfig", "ShoeboxDomain", "absorption_coefficient", "make_config",
    "quad_count", "sample_boundary", "training_point_count",
    "HergNetParams", "init_params", "load_params", "param_count",
    "save_params", "total_field", "total_field_batch",
    "ModeTable", "build_mode_table", "fd_reference", "modal_green",
    "modal_green_batch",
    "TransferFunction", "error_metrics", "impulse_response", "spl", "sweep",
    "unwrap_phase",
    "TrainConfig", "TrainReport", "gradcheck", "loss", "train",
    "__version__",
]
