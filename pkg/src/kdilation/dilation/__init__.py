"""Pointwise Λᵏ norms of differentials and sampled k-dilation."""

from .chart_audit import ChartAudit, chart_audit
from .engine import (
    DilationOptions,
    DilationReport,
    NaturalityCheck,
    SweepPoint,
    SweepRangeError,
    SweepResult,
    check_epsilon_grid,
    composition_bound_check,
    compound_matrix,
    fit_sweep,
    interpolation_check,
    interpolation_holds,
    kdilation,
    lambda_k_norm,
    lambda_k_norms,
    naturality_check,
    pointwise_norms,
    scaling_sweep,
    sweep_point,
)
from .jacobian import (
    DilationError,
    FrameError,
    JacobianMode,
    JacobianSample,
    NonSmoothPointError,
    differential_pair,
    frame_jacobian_pair,
    frame_jacobians,
    jacobian,
    tangent_differentials,
)
from .svd import padded_singular_values, singular_values

__all__ = [
    "ChartAudit",
    "DilationError",
    "DilationOptions",
    "DilationReport",
    "FrameError",
    "JacobianMode",
    "JacobianSample",
    "NaturalityCheck",
    "NonSmoothPointError",
    "SweepPoint",
    "SweepRangeError",
    "SweepResult",
    "chart_audit",
    "check_epsilon_grid",
    "composition_bound_check",
    "compound_matrix",
    "differential_pair",
    "fit_sweep",
    "frame_jacobian_pair",
    "frame_jacobians",
    "interpolation_check",
    "interpolation_holds",
    "jacobian",
    "kdilation",
    "lambda_k_norm",
    "lambda_k_norms",
    "naturality_check",
    "padded_singular_values",
    "pointwise_norms",
    "scaling_sweep",
    "singular_values",
    "sweep_point",
    "tangent_differentials",
]
