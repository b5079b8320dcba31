"""Λᵏ norms, sampled k-dilation and the ε scaling sweep of the construction."""

import itertools
import logging
import math
from collections.abc import Sequence
from fractions import Fraction

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..ledger.models import HomotopyClassDescriptor
from ..ledger.rules import epsilon_exponent
from ..maps.base import MapNode
from ..maps.chart import DEFAULT_MAX_EXTENT, DEFAULT_MAX_ROWS, ChartCapacityError, min_admissible_epsilon
from ..maps.combinators import Compose
from ..maps.construct import prop1_construct
from ..maps.expr import MapExpr
from .jacobian import (
    FD_STEP,
    NONSMOOTH_TOL,
    DilationError,
    JacobianMode,
    NonSmoothPointError,
    frame_jacobian_pair,
    resolve_mode,
)
from .svd import padded_singular_values

logger = logging.getLogger(__name__)

INTERPOLATION_SLACK = 1e-12
BOUND_TOL = 0.05
SLOPE_TOL = 0.15
VANISH_TOL = 1e-12
# |Λᵏ| below this fraction of s₁ᵏ counts as zero in the h/2h agreement test
NORM_FLOOR = 1e-9
MIN_EPSILON_SPAN = 8.0

START_FRACTION = 0.01
STEP_MAX = 0.1
STEP_MIN = 1e-4
MAX_ASCENT_PASSES = 200
CHUNK_SIZE = 4096
# ascent starts must stay smooth at this multiple of h
START_CLEARANCE = 10


class DilationOptions(BaseModel):
    """Knobs of the sampled sup search."""

    model_config = ConfigDict(frozen=True)

    mode: JacobianMode = JacobianMode.AUTO
    h: float = Field(default=FD_STEP, gt=0)
    nonsmooth_tol: float = Field(default=NONSMOOTH_TOL, gt=0)
    start_fraction: float = Field(default=START_FRACTION, gt=0, le=1)
    step_max: float = Field(default=STEP_MAX, gt=0)
    step_min: float = Field(default=STEP_MIN, gt=0)
    max_ascent_passes: int = Field(default=MAX_ASCENT_PASSES, ge=0)
    chunk_size: int = Field(default=CHUNK_SIZE, ge=1)


class SweepRangeError(DilationError, ValueError):
    """An ε grid the chart cannot realize, or too narrow to fit a slope."""

    def __init__(self, message: str, usable: tuple[float, float] | None = None):
        super().__init__(message)
        self.usable = usable


def lambda_k_norm(s: Sequence[float] | np.ndarray, k: int) -> float:
    """|Λᵏ| from non-increasing singular values: product of the k largest, 0 when k exceeds their count."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    s = np.asarray(s, dtype=float)
    if k > s.shape[0]:
        return 0.0
    return float(np.prod(s[:k]))


def lambda_k_norms(S: np.ndarray, k: int) -> np.ndarray:
    """lambda_k_norm over every row of an (N, r) array of sorted singular values."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if k > S.shape[1]:
        return np.zeros(S.shape[0])
    return np.prod(S[:, :k], axis=1)


def compound_matrix(A: np.ndarray, k: int) -> np.ndarray:
    """k-th compound of a matrix or a stack of them: all k×k minors, in lexicographic subset order."""
    A = np.asarray(A, dtype=float)
    rows = np.array(list(itertools.combinations(range(A.shape[-2]), k)), dtype=np.intp).reshape(-1, k)
    cols = np.array(list(itertools.combinations(range(A.shape[-1]), k)), dtype=np.intp).reshape(-1, k)
    if not rows.shape[0] or not cols.shape[0]:
        return np.zeros((*A.shape[:-2], rows.shape[0], cols.shape[0]))
    return np.linalg.det(A[..., rows[:, None, :, None], cols[None, :, None, :]])


def interpolation_holds(S: np.ndarray) -> np.ndarray:
    """Row-wise interpolation test over an (N, r) array of sorted singular values."""
    S = np.atleast_2d(np.asarray(S, dtype=float))
    ok = np.ones(S.shape[0], dtype=bool)
    for k in range(1, S.shape[1]):
        lhs = lambda_k_norms(S, k + 1)
        rhs = lambda_k_norms(S, k) ** ((k + 1) / k)
        ok &= lhs <= rhs * (1 + INTERPOLATION_SLACK) + INTERPOLATION_SLACK
    return ok


def interpolation_check(s: Sequence[float] | np.ndarray) -> bool:
    """|Λ^(k+1)| ≤ |Λ^k|^((k+1)/k) for every k where both sides are defined."""
    return bool(interpolation_holds(np.asarray(s, dtype=float).reshape(1, -1))[0])


def pointwise_norms(
    expr: MapNode,
    X: np.ndarray,
    k: int,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    nonsmooth_tol: float = NONSMOOTH_TOL,
    chunk_size: int = CHUNK_SIZE,
) -> tuple[np.ndarray, np.ndarray]:
    """|Λᵏdf| at every point and the smooth mask, evaluated in chunks.

    With finite differences a point is smooth only when |Λᵏ| itself agrees
    at steps h and 2h to a relative nonsmooth_tol.
    """
    differenced = resolve_mode(expr, mode) is JacobianMode.FINITE_DIFFERENCE
    values, masks = [], []
    for start in range(0, X.shape[0], chunk_size):
        J, J2, smooth = frame_jacobian_pair(expr, X[start : start + chunk_size], mode, h, nonsmooth_tol)
        S = padded_singular_values(J)
        v = lambda_k_norms(S, k)
        if differenced:
            v2 = lambda_k_norms(padded_singular_values(J2), k)
            floor = NORM_FLOOR * S[:, 0] ** k
            smooth = smooth & (np.abs(v - v2) <= nonsmooth_tol * (v + floor))
        values.append(v)
        masks.append(smooth)
    if not values:
        return np.zeros(0), np.zeros(0, dtype=bool)
    return np.concatenate(values), np.concatenate(masks)


def composition_bound_check(
    outer: MapNode,
    inner: MapNode,
    X: np.ndarray,
    k: int,
    mode: JacobianMode | str = JacobianMode.AUTO,
) -> np.ndarray:
    """|Λᵏd(g∘f)|(x) ≤ |Λᵏdg|(f(x))·|Λᵏdf|(x) at every point, with a small relative slack."""
    composed, _ = pointwise_norms(Compose(outer=outer, inner=inner), X, k, mode)
    vf, _ = pointwise_norms(inner, X, k, mode)
    vg, _ = pointwise_norms(outer, inner.evaluate(X), k, mode)
    return composed <= vg * vf * (1 + 1e-6) + 1e-9


class DilationReport(BaseModel):
    """Sampled k-dilation: a lower bound for the supremum of |Λᵏdf|."""

    model_config = ConfigDict(frozen=True)

    k: int = Field(ge=1)
    estimate: float = Field(ge=0)
    sampled_max: float = Field(ge=0)
    budget: int = Field(ge=1)
    seed: int
    ascent_steps: int = Field(ge=0)
    argmax_point: tuple[float, ...]
    skipped: int = Field(default=0, ge=0)
    mode: JacobianMode
    predicted_bound: float | None = None
    bound_tolerance: float = BOUND_TOL
    lower_bound: bool = True
    source: str = "dilation-engine"

    @property
    def within_predicted_bound(self) -> bool | None:
        if self.predicted_bound is None:
            return None
        return self.estimate <= self.predicted_bound * (1 + self.bound_tolerance)


def _ascent_points(expr: MapNode, budget: int, seed: int) -> np.ndarray:
    """Half the budget on the whole domain, half on the map's support when it is known."""
    support = expr.support_points(budget // 2, seed) if budget >= 2 else None
    if support is None or support.shape[0] == 0:
        return expr.domain.sample(budget, seed)
    return np.concatenate([expr.domain.sample(budget - support.shape[0], seed), support], axis=0)


def _coordinate_ascent(
    expr: MapNode,
    k: int,
    X: np.ndarray,
    v: np.ndarray,
    mode: JacobianMode | str,
    options: DilationOptions,
) -> tuple[np.ndarray, np.ndarray, int]:
    """Shrinking-step search along tangent frame directions, all starts at once."""
    dom = expr.domain
    sigma = options.step_max
    passes = 0
    while sigma >= options.step_min and passes < options.max_ascent_passes:
        improved = False
        for i in range(dom.dim):
            for sign in (1.0, -1.0):
                F = dom.tangent_frames(X)
                C = dom.retract(X, sign * sigma * F[:, :, i])
                cv, smooth = pointwise_norms(expr, C, k, mode, options.h, options.nonsmooth_tol, options.chunk_size)
                better = smooth & (cv > v)
                if better.any():
                    X = np.where(better[:, None], C, X)
                    v = np.where(better, cv, v)
                    improved = True
        passes += 1
        if not improved:
            sigma /= 2
    return X, v, passes


def kdilation(
    expr: MapNode,
    k: int,
    budget: int,
    seed: int = 0,
    options: DilationOptions | None = None,
) -> DilationReport:
    """Estimate sup |Λᵏdf| by Sobol sampling plus local ascent from the best 1%."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if budget < 1:
        raise ValueError(f"budget must be at least 1, got {budget}")
    options = options or DilationOptions()
    resolved = resolve_mode(expr, options.mode)
    h = options.h
    X = _ascent_points(expr, budget, seed)
    values, smooth = pointwise_norms(expr, X, k, options.mode, h, options.nonsmooth_tol, options.chunk_size)
    skipped = int((~smooth).sum())
    if skipped == X.shape[0]:
        raise NonSmoothPointError(f"all {skipped} samples of {expr.kind_name} sit near non-smooth loci")
    values = np.where(smooth, values, -np.inf)
    best = int(np.argmax(values))
    sampled_max = float(values[best])
    estimate, argmax, steps = sampled_max, X[best], 0

    if sampled_max > 0:
        count = max(1, math.ceil(options.start_fraction * budget))
        order = np.argsort(-values, kind="stable")[:count]
        order = order[values[order] > 0]
        starts, start_values = X[order], values[order]
        if resolved is JacobianMode.FINITE_DIFFERENCE:
            _, clear = pointwise_norms(
                expr, starts, k, options.mode, START_CLEARANCE * h / 2, options.nonsmooth_tol, options.chunk_size
            )
            starts, start_values = starts[clear], start_values[clear]
        if starts.shape[0]:
            Xa, va, steps = _coordinate_ascent(expr, k, starts, start_values, options.mode, options)
            top = int(np.argmax(va))
            if va[top] > estimate:
                estimate, argmax = float(va[top]), Xa[top]

    predicted = None
    bound = getattr(expr, "predicted_bound", None)
    if callable(bound):
        predicted = float(bound(k))
    report = DilationReport(
        k=k,
        estimate=estimate,
        sampled_max=sampled_max,
        budget=budget,
        seed=seed,
        ascent_steps=steps,
        argmax_point=tuple(float(x) for x in argmax),
        skipped=skipped,
        mode=resolved,
        predicted_bound=predicted,
    )
    if report.within_predicted_bound is False:
        logger.warning("k=%d estimate %.6g exceeds the predicted bound %.6g", k, estimate, predicted)
    logger.debug("kdilation %s k=%d budget=%d: %.6g (%d skipped)", expr.kind_name, k, budget, estimate, skipped)
    return report


class NaturalityCheck(BaseModel):
    """kdilation(F∘f, k) against Lip(F)^k · kdilation(f, k)."""

    model_config = ConfigDict(frozen=True)

    k: int
    outer_lipschitz: float
    composed: float
    inner: float
    bound: float

    @property
    def passed(self) -> bool:
        return self.composed <= self.bound * (1 + 1e-6) + 1e-9


def naturality_check(
    outer: MapNode,
    inner: MapNode,
    k: int,
    budget: int,
    seed: int = 0,
    options: DilationOptions | None = None,
) -> NaturalityCheck:
    """Post-composition with an L-Lipschitz F scales the k-dilation by at most L^k.

    The inner estimate is only a lower bound, so it is raised to the inner
    value at the composed argmax before the comparison.
    """
    options = options or DilationOptions()
    lip = outer.lipschitz
    if not math.isfinite(lip):
        raise DilationError(f"{outer.kind_name} declares no Lipschitz bound")
    composed = kdilation(Compose(outer=outer, inner=inner), k, budget, seed, options)
    base = kdilation(inner, k, budget, seed, options)
    at_argmax, _ = pointwise_norms(
        inner, np.asarray([composed.argmax_point]), k, options.mode, options.h, options.nonsmooth_tol
    )
    inner_value = max(base.estimate, float(at_argmax[0]))
    check = NaturalityCheck(
        k=k,
        outer_lipschitz=lip,
        composed=composed.estimate,
        inner=inner_value,
        bound=lip**k * inner_value,
    )
    logger.debug("naturality k=%d: %.6g <= %.6g", k, check.composed, check.bound)
    return check


class SweepPoint(BaseModel):
    """One ε of a scaling sweep."""

    model_config = ConfigDict(frozen=True)

    epsilon: float
    estimate: float
    budget: int
    ascent_steps: int
    predicted_bound: float | None
    skipped: int = 0


class SweepResult(BaseModel):
    """Fitted log-log slope of the k-dilation against ε, next to the predicted exponent."""

    model_config = ConfigDict(frozen=True)

    descriptor: HomotopyClassDescriptor
    k: int
    points: list[SweepPoint]
    predicted_exponent: str
    slope: float | None
    intercept: float | None
    residuals: list[float]
    vanishing: bool
    tolerance: float = SLOPE_TOL

    @property
    def predicted(self) -> float:
        return float(Fraction(self.predicted_exponent))

    @property
    def growth(self) -> bool:
        """Dilation grows as ε shrinks."""
        return self.slope is not None and self.slope < 0

    @property
    def passed(self) -> bool:
        if self.vanishing:
            return True
        return self.slope is not None and abs(self.slope - self.predicted) <= self.tolerance


def check_epsilon_grid(
    m: int,
    p: int,
    epsilon_grid: Sequence[float | Fraction],
    max_rows: int = DEFAULT_MAX_ROWS,
    max_extent: float = DEFAULT_MAX_EXTENT,
) -> list[float]:
    """Validate a decreasing ε grid spanning a factor of 8, all inside the chart's range."""
    grid = [float(e) for e in epsilon_grid]
    if len(grid) < 2:
        raise SweepRangeError(f"a sweep needs at least two ε values, got {len(grid)}")
    if any(a <= b for a, b in zip(grid, grid[1:], strict=False)):
        raise SweepRangeError(f"ε grid must be strictly decreasing, got {grid}")
    if grid[0] / grid[-1] < MIN_EPSILON_SPAN:
        raise SweepRangeError(f"ε grid spans a factor {grid[0] / grid[-1]:g}, needs at least {MIN_EPSILON_SPAN:g}")
    floor = min_admissible_epsilon(m, p, max_rows, max_extent)
    usable = (floor, 1.0)
    rejected = [e for e in grid if e > 1.0 or e < floor]
    if rejected:
        raise SweepRangeError(
            f"chart rejects ε {rejected}; usable range is [{floor:.6g}, 1]",
            usable=usable,
        )
    return grid


def sweep_point(
    descriptor: HomotopyClassDescriptor,
    f1: MapExpr,
    f2: MapExpr,
    k: int,
    epsilon: float,
    budget: int,
    seed: int = 0,
    max_rows: int = DEFAULT_MAX_ROWS,
    max_extent: float = DEFAULT_MAX_EXTENT,
    options: DilationOptions | None = None,
) -> SweepPoint:
    """kdilation of the construction at one ε."""
    try:
        node = prop1_construct(descriptor, f1, f2, epsilon, max_rows=max_rows, max_extent=max_extent)
    except ChartCapacityError as e:
        raise SweepRangeError(str(e), usable=(e.min_epsilon, 1.0)) from e
    report = kdilation(node, k, budget, seed, options)
    logger.info("eps=%g k=%d: estimate %.6g", epsilon, k, report.estimate)
    return SweepPoint(
        epsilon=epsilon,
        estimate=report.estimate,
        budget=budget,
        ascent_steps=report.ascent_steps,
        predicted_bound=report.predicted_bound,
        skipped=report.skipped,
    )


def fit_sweep(
    descriptor: HomotopyClassDescriptor, k: int, points: list[SweepPoint], tolerance: float = SLOPE_TOL
) -> SweepResult:
    """Least-squares slope of log(estimate) against log(ε)."""
    predicted = epsilon_exponent(descriptor.m, descriptor.n, descriptor.p, k)
    estimates = np.array([pt.estimate for pt in points])
    zero = estimates <= VANISH_TOL
    if zero.all():
        return SweepResult(
            descriptor=descriptor,
            k=k,
            points=points,
            predicted_exponent=str(predicted),
            slope=None,
            intercept=None,
            residuals=[],
            vanishing=True,
            tolerance=tolerance,
        )
    if zero.any():
        raise DilationError(
            f"k={k} dilation vanishes at some ε but not others: "
            + ", ".join(f"{pt.epsilon:g}->{pt.estimate:.3g}" for pt in points)
        )
    x = np.log([pt.epsilon for pt in points])
    y = np.log(estimates)
    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    return SweepResult(
        descriptor=descriptor,
        k=k,
        points=points,
        predicted_exponent=str(predicted),
        slope=float(slope),
        intercept=float(intercept),
        residuals=[float(r) for r in residuals],
        vanishing=False,
        tolerance=tolerance,
    )


def scaling_sweep(
    descriptor: HomotopyClassDescriptor,
    f1: MapExpr,
    f2: MapExpr,
    k: int,
    epsilon_grid: Sequence[float | Fraction],
    budget: int,
    seed: int = 0,
    max_rows: int = DEFAULT_MAX_ROWS,
    max_extent: float = DEFAULT_MAX_EXTENT,
    tolerance: float = SLOPE_TOL,
    options: DilationOptions | None = None,
) -> SweepResult:
    """Run the construction over an ε grid and compare the fitted exponent with (m/p)(k − n − (n/m)p)."""
    grid = check_epsilon_grid(descriptor.m, descriptor.p, epsilon_grid, max_rows, max_extent)
    points = [
        sweep_point(descriptor, f1, f2, k, eps, budget, seed, max_rows, max_extent, options)
        for eps in grid
    ]
    return fit_sweep(descriptor, k, points, tolerance)
