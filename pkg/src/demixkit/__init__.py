"""Convex demixing of superimposed structured signals."""
from .atoms import GaugeKind, GaugeSpec, dual_gauge_eval, gauge_eval, project_l1_ball, prox
from .exceptions import ImageFormatError, NumericalError, UnsupportedFormatError
from .geometry import ConeModel, Prediction, SdimEstimate, predict_success, sdim_monte_carlo, total_delta
from .operators import ConvLift, Dct, Dense, Identity, LinearOp, RandomRotation, SubsampleRows
from .solvers import (
    Component,
    DemixProblem,
    SolveResult,
    SolverOptions,
    Status,
    admm_demix,
    decomposition_demix,
    demix,
    kkt_check,
    l0_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "GaugeKind",
    "GaugeSpec",
    "gauge_eval",
    "dual_gauge_eval",
    "prox",
    "project_l1_ball",
    "NumericalError",
    "ImageFormatError",
    "UnsupportedFormatError",
    "ConeModel",
    "SdimEstimate",
    "Prediction",
    "sdim_monte_carlo",
    "total_delta",
    "predict_success",
    "LinearOp",
    "Identity",
    "Dense",
    "Dct",
    "RandomRotation",
    "SubsampleRows",
    "ConvLift",
    "Component",
    "DemixProblem",
    "SolverOptions",
    "SolveResult",
    "Status",
    "admm_demix",
    "decomposition_demix",
    "demix",
    "kkt_check",
    "l0_oracle",
]
