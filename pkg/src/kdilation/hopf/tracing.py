"""Preimage curves f⁻¹(y) of maps S³ → S² by predictor-corrector continuation."""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..dilation.jacobian import FD_STEP, JacobianMode, tangent_differentials
from ..dilation.svd import singular_values
from ..errors import KDilationError
from ..maps.base import MapNode, sphere, sphere_frames
from ..maps.combinators import CompositionError

logger = logging.getLogger(__name__)

TOL_PRE = 1e-6
NEWTON_TOL = 1e-11
CORRECTOR_ITERATIONS = 12
SEED_ITERATIONS = 40
SEED_DAMPING = 0.25  # longest tangent move of one seed Newton iteration
RANK_TOL = 1e-3
DEFAULT_STEP = 0.02
MAX_HALVINGS = 5
SEED_COUNT = 256
MAX_VERTICES = 50_000
DEDUP_FACTOR = 3.0


class HopfMeterError(KDilationError):
    """Base error of the Hopf invariant pipeline."""


class TracingError(HopfMeterError):
    """Continuation along a preimage curve failed."""


class RegularValueError(TracingError):
    """The differential drops rank somewhere on the preimage of y."""

    def __init__(self, message: str, value: tuple[float, ...]):
        super().__init__(message)
        self.value = value


class CurveTrace(BaseModel):
    """Closed polylines on S³ making up f⁻¹(y)."""

    model_config = ConfigDict(frozen=True)

    components: list[list[tuple[float, float, float, float]]]
    regular_value: tuple[float, float, float]
    step: float
    closure_gaps: list[float]

    @property
    def closure_gap(self) -> float:
        return max(self.closure_gaps, default=0.0)

    def arrays(self) -> list[np.ndarray]:
        return [np.asarray(c, dtype=float) for c in self.components]


class _Preimage:
    """The two equations F_yᵀ(f(x) − y) = 0 on S³, F_y a positive frame at y."""

    def __init__(self, expr: MapNode, y: np.ndarray, mode: JacobianMode | str, h: float, tol_pre: float):
        self.expr = expr
        self.tol_pre = tol_pre
        self.y = y
        self.frame = sphere_frames(y[None, :])[0]
        self.mode = mode
        self.h = h
        self.space = expr.domain

    def gap(self, X: np.ndarray) -> np.ndarray:
        return np.linalg.norm(self.expr.evaluate(X) - self.y, axis=1)

    def residual(self, X: np.ndarray) -> np.ndarray:
        return (self.expr.evaluate(X) - self.y) @ self.frame

    def differential(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Constraint differential in tangent coordinates (N, 2, 3) and the frames (N, 4, 3)."""
        D, Fx, _ = tangent_differentials(self.expr, X, self.mode, self.h)
        return np.einsum("ao,nai->noi", self.frame, D), Fx

    def newton(self, X: np.ndarray, iterations: int, damping: float | None = None) -> np.ndarray:
        for _ in range(iterations):
            r = self.residual(X)
            if np.max(np.abs(r), initial=0.0) < NEWTON_TOL:
                break
            C, Fx = self.differential(X)
            delta = np.einsum("nij,nj->ni", np.linalg.pinv(C), r)
            if damping is not None:
                size = np.linalg.norm(delta, axis=1, keepdims=True)
                delta *= np.minimum(1.0, damping / np.maximum(size, 1e-300))
            X = self.space.project(X - np.einsum("nai,ni->na", Fx, delta))
        return X

    def kernel(self, x: np.ndarray) -> np.ndarray:
        """Unit tangent along the curve, oriented so (kernel, preimage of the frame at y) is positive."""
        C, Fx = self.differential(x[None, :])
        k = Fx[0] @ np.cross(C[0, 0], C[0, 1])
        return k / np.linalg.norm(k)


def _trace_component(
    problem: _Preimage, start: np.ndarray, step: float, max_vertices: int
) -> tuple[np.ndarray, float]:
    """Walk along the oriented kernel until the curve returns within one step of its start."""
    points = [start]
    x = start
    left = False
    while len(points) < max_vertices:
        direction = problem.kernel(x)
        for halving in range(MAX_HALVINGS + 1):
            s = step / 2**halving
            guess = problem.space.project((x + s * direction)[None, :])
            candidate = problem.newton(guess, CORRECTOR_ITERATIONS)
            ok = problem.gap(candidate)[0] < problem.tol_pre and np.linalg.norm(candidate[0] - x) < 2 * s
            if ok:
                x = candidate[0]
                break
        else:
            raise TracingError(f"corrector diverged after {MAX_HALVINGS} step halvings at {x.tolist()}")
        distance = float(np.linalg.norm(x - start))
        left = left or distance > 2 * step
        points.append(x)
        if left and distance < step:
            return np.asarray(points), distance
    raise TracingError(f"preimage curve did not close within {max_vertices} vertices")


def _hausdorff(A: np.ndarray, B: np.ndarray) -> float:
    D = np.linalg.norm(A[:, None, :] - B[None, :, :], axis=2)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


def trace_preimage(
    expr: MapNode,
    y: np.ndarray | tuple[float, ...],
    step: float = DEFAULT_STEP,
    seed: int = 0,
    seed_count: int = SEED_COUNT,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    max_vertices: int = MAX_VERTICES,
    tol_pre: float = TOL_PRE,
) -> CurveTrace:
    """Every component of f⁻¹(y) reachable from a Sobol seed grid on S³."""
    if expr.domain != sphere(3) or expr.codomain != sphere(2):
        raise CompositionError(f"preimage tracing needs a map S^3 -> S^2, got {expr.domain} -> {expr.codomain}")
    y = np.asarray(y, dtype=float)
    y = y / np.linalg.norm(y)
    problem = _Preimage(expr, y, mode, h, tol_pre)

    seeds = problem.newton(sphere(3).sample(seed_count, seed), SEED_ITERATIONS, damping=SEED_DAMPING)
    seeds = seeds[problem.gap(seeds) < tol_pre]
    if seeds.shape[0]:
        C, _ = problem.differential(seeds)
        smallest = singular_values(C)[:, -1]
        if smallest.min() <= RANK_TOL:
            raise RegularValueError(
                f"{tuple(y.round(6).tolist())} is not a regular value: smallest singular value {smallest.min():.3g}",
                value=tuple(float(v) for v in y),
            )

    components: list[np.ndarray] = []
    gaps: list[float] = []
    separation = DEDUP_FACTOR * step
    for x0 in seeds:
        if any(np.min(np.linalg.norm(c - x0, axis=1)) < separation for c in components):
            continue
        curve, gap = _trace_component(problem, x0, step, max_vertices)
        if any(_hausdorff(curve, c) < separation for c in components):
            continue
        components.append(curve)
        gaps.append(gap)

    logger.debug("traced %d component(s) over %s from %d seeds", len(components), y.round(4), seeds.shape[0])
    return CurveTrace(
        components=[c.tolist() for c in components],
        regular_value=y.tolist(),
        step=step,
        closure_gaps=gaps,
    )
