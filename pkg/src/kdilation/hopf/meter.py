"""Hopf invariant of maps S³ → S² and the empirical |H| ≤ C·D² audit."""

import logging
from functools import lru_cache

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..dilation.engine import DilationOptions, DilationReport, kdilation
from ..dilation.jacobian import FD_STEP, JacobianMode
from ..maps.base import MapNode, sphere
from ..maps.combinators import Compose, CompositionError
from ..maps.expr import MapExpr
from ..maps.primitives import DegreeWrap, Hopf
from .linking import CurvesTooCoarseError, round_linking, total_linking_value
from .tracing import DEFAULT_STEP, MAX_HALVINGS, TOL_PRE, CurveTrace, RegularValueError, trace_preimage

logger = logging.getLogger(__name__)

MIN_SEPARATION = 0.1
MAX_ATTEMPTS = 20
PERTURBATION = 0.05
FIT_MARGIN = 1.25
CALIBRATION_DEGREES = (1, 2, 3)
GOLDEN = (1 + 5**0.5) / 2


def regular_value_candidates() -> np.ndarray:
    """The twelve unit icosahedron vertices in a fixed order."""
    out = []
    for a in (1.0, -1.0):
        for b in (GOLDEN, -GOLDEN):
            out.extend([(0.0, a, b), (a, b, 0.0), (b, 0.0, a)])
    V = np.asarray(out)
    return V / np.linalg.norm(V, axis=1, keepdims=True)


def regular_value_pairs(count: int = 1) -> list[tuple[np.ndarray, np.ndarray]]:
    """Antipodal candidate pairs first, then neighbouring pairs, deterministically."""
    V = regular_value_candidates()
    pairs: list[tuple[np.ndarray, np.ndarray]] = []
    used: set[int] = set()
    for i in range(len(V)):
        j = int(np.argmin(np.linalg.norm(V + V[i], axis=1)))
        if i not in used and j not in used:
            pairs.append((V[i], V[j]))
            used.update((i, j))
    for i in range(len(V)):
        for j in range(i + 1, len(V)):
            if np.linalg.norm(V[i] + V[j]) > 1e-9:
                pairs.append((V[i], V[j]))
    return pairs[:count]


def _spherical_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.arccos(np.clip(a @ b, -1.0, 1.0)))


def _check_hopf_map(expr: MapNode) -> None:
    if expr.domain != sphere(3) or expr.codomain != sphere(2):
        raise CompositionError(f"the Hopf invariant needs a map S^3 -> S^2, got {expr.domain} -> {expr.codomain}")


class HopfComputation(BaseModel):
    """Two traced fibers and their linking number."""

    model_config = ConfigDict(frozen=True)

    map: MapExpr
    y1: tuple[float, float, float]
    y2: tuple[float, float, float]
    traces: tuple[CurveTrace, CurveTrace]
    linking: int
    linking_value: float
    step: float
    substitutions: list[str] = Field(default_factory=list)
    source: str = "hopf-meter"


class GromovAudit(BaseModel):
    """|H| against fitted_C·D² with D the sampled 2-dilation."""

    model_config = ConfigDict(frozen=True, populate_by_name=True)

    hopf_invariant: int
    dilation2: DilationReport
    ratio: float
    fitted_c: float = Field(serialization_alias="fitted_C")
    passed: bool = Field(serialization_alias="pass")


class _RegularValueSearch:
    """Shared attempt budget for finding two regular values."""

    def __init__(self, max_attempts: int):
        self.max_attempts = max_attempts
        self.substitutions: list[str] = []
        self.candidates = regular_value_candidates()

    def trace(
        self,
        expr: MapNode,
        y: np.ndarray,
        avoid: np.ndarray | None,
        step: float,
        seed: int,
        mode: JacobianMode | str,
        h: float,
        tol_pre: float,
    ) -> CurveTrace:
        candidate = y
        while True:
            try:
                return trace_preimage(expr, candidate, step=step, seed=seed, mode=mode, h=h, tol_pre=tol_pre)
            except RegularValueError as e:
                attempt = len(self.substitutions) + 1
                if attempt > self.max_attempts:
                    raise RegularValueError(
                        f"no regular value found in {self.max_attempts} attempts: {e}", value=e.value
                    ) from e
                nudged = candidate + PERTURBATION * self.candidates[attempt % len(self.candidates)]
                nudged = nudged / np.linalg.norm(nudged)
                if avoid is not None and _spherical_distance(nudged, avoid) < MIN_SEPARATION:
                    nudged = candidate - PERTURBATION * self.candidates[attempt % len(self.candidates)]
                    nudged = nudged / np.linalg.norm(nudged)
                self.substitutions.append(f"{np.round(candidate, 6).tolist()} -> {np.round(nudged, 6).tolist()}")
                logger.info("regular value substituted: %s", self.substitutions[-1])
                candidate = nudged


def compute_hopf(
    expr: MapExpr,
    pair_index: int = 0,
    step: float = DEFAULT_STEP,
    seed: int = 0,
    max_halvings: int = MAX_HALVINGS,
    max_attempts: int = MAX_ATTEMPTS,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    tol_pre: float = TOL_PRE,
) -> HopfComputation:
    """Linking number of two regular fibers, shrinking the step when the curves are too coarse."""
    _check_hopf_map(expr)
    y1, y2 = regular_value_pairs(pair_index + 1)[pair_index]
    search = _RegularValueSearch(max_attempts)
    halving = 0
    while True:
        t1 = search.trace(expr, y1, None, step, seed, mode, h, tol_pre)
        y1 = np.asarray(t1.regular_value)
        t2 = search.trace(expr, y2, y1, step, seed, mode, h, tol_pre)
        y2 = np.asarray(t2.regular_value)
        try:
            value = total_linking_value(t1.arrays(), t2.arrays())
            linking = round_linking(value)
        except CurvesTooCoarseError as e:
            if halving == max_halvings:
                raise
            logger.info("%s; retracing with step %g", e, step / 2)
            step /= 2
            halving += 1
            continue
        logger.debug("Hopf invariant of %s: %d (sum %.6f)", expr.kind_name, linking, value)
        return HopfComputation(
            map=expr,
            y1=tuple(t1.regular_value),
            y2=tuple(t2.regular_value),
            traces=(t1, t2),
            linking=linking,
            linking_value=value,
            step=step,
            substitutions=search.substitutions,
        )


def hopf_invariant(expr: MapExpr, pair_index: int = 0, step: float = DEFAULT_STEP, seed: int = 0) -> int:
    """H(f) as the linking number of two regular fibers."""
    return compute_hopf(expr, pair_index=pair_index, step=step, seed=seed).linking


def gromov_check(hopf: HopfComputation, dilation2: DilationReport, fitted_c: float) -> GromovAudit:
    """Combine H and D into the audit record."""
    H, D = hopf.linking, dilation2.estimate
    if H == 0:
        ratio = 0.0
    elif D == 0:
        ratio = float("inf")
    else:
        ratio = abs(H) / D**2
    return GromovAudit(
        hopf_invariant=H,
        dilation2=dilation2,
        ratio=ratio,
        fitted_c=fitted_c,
        passed=abs(H) <= fitted_c * D**2 + 1e-12,
    )


@lru_cache(maxsize=8)
def calibrate_fitted_c(budget: int, seed: int = 0, options: DilationOptions | None = None) -> float:
    """FIT_MARGIN times the largest |H|/D² over hopf ∘ wrap(d), d = 1, 2, 3."""
    ratios = []
    for d in CALIBRATION_DEGREES:
        expr = Compose(outer=Hopf(), inner=DegreeWrap(degree=d))
        H = hopf_invariant(expr, seed=seed)
        D = kdilation(expr, 2, budget, seed, options).estimate
        ratios.append(abs(H) / D**2)
        logger.info("calibration d=%d: H=%d D=%.6g ratio=%.6g", d, H, D, ratios[-1])
    return FIT_MARGIN * max(ratios)


def gromov_audit(
    expr: MapExpr,
    budget: int,
    seed: int = 0,
    fitted_c: float | None = None,
    options: DilationOptions | None = None,
    step: float = DEFAULT_STEP,
) -> GromovAudit:
    """H, D = kdilation(e, 2) and the check |H| ≤ fitted_C·D²."""
    hopf = compute_hopf(expr, step=step, seed=seed)
    dilation2 = kdilation(expr, 2, budget, seed, options)
    if fitted_c is None:
        fitted_c = calibrate_fitted_c(budget, seed, options)
    return gromov_check(hopf, dilation2, fitted_c)
