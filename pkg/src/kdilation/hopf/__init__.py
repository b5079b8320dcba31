"""Hopf invariants from traced fibers and their linking numbers."""

from .linking import (
    CurvesTooCoarseError,
    LinkingError,
    gauss_sum,
    linking_number,
    linking_value,
    stereographic,
    total_linking_value,
)
from .meter import (
    GromovAudit,
    HopfComputation,
    calibrate_fitted_c,
    compute_hopf,
    gromov_audit,
    gromov_check,
    hopf_invariant,
    regular_value_candidates,
    regular_value_pairs,
)
from .tracing import CurveTrace, HopfMeterError, RegularValueError, TracingError, trace_preimage

__all__ = [
    "CurveTrace",
    "CurvesTooCoarseError",
    "GromovAudit",
    "HopfComputation",
    "HopfMeterError",
    "LinkingError",
    "RegularValueError",
    "TracingError",
    "calibrate_fitted_c",
    "compute_hopf",
    "gauss_sum",
    "gromov_audit",
    "gromov_check",
    "hopf_invariant",
    "linking_number",
    "linking_value",
    "regular_value_candidates",
    "regular_value_pairs",
    "stereographic",
    "total_linking_value",
    "trace_preimage",
]
