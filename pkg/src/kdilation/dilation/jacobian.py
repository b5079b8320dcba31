"""Differentials of map nodes in orthonormal tangent frames."""

import logging
from enum import Enum
from typing import Any, NamedTuple

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from ..errors import KDilationError
from ..maps.base import MapNode
from ..maps.combinators import Compose, Product
from ..maps.construct import Prop1Map
from .svd import padded_singular_values

logger = logging.getLogger(__name__)

FD_STEP = 1e-5
NONSMOOTH_TOL = 1e-3
FRAME_TOL = 1e-10


class DilationError(KDilationError):
    """Base error of the dilation engine."""


class NonSmoothPointError(DilationError):
    """Finite differences at h and 2h disagree: the point sits near a non-smooth locus."""


class FrameError(DilationError):
    """A tangent frame failed its orthonormality check."""


class JacobianMode(str, Enum):
    """How a differential was obtained."""

    ANALYTIC = "analytic"
    FINITE_DIFFERENCE = "finite-difference"
    AUTO = "auto"


class JacobianSample(BaseModel):
    """df at one point, in orthonormal tangent frames of domain and codomain."""

    model_config = ConfigDict(frozen=True)

    point: tuple[float, ...]
    matrix: tuple[tuple[float, ...], ...]
    singular_values: tuple[float, ...]
    mode: JacobianMode
    step: float | None = None

    @field_validator("singular_values")
    @classmethod
    def _sorted(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if any(s < 0 for s in v) or any(a < b for a, b in zip(v, v[1:], strict=False)):
            raise ValueError(f"singular values must be non-negative and non-increasing, got {v}")
        return v


def resolve_mode(expr: MapNode, mode: JacobianMode | str) -> JacobianMode:
    mode = JacobianMode(mode)
    if mode is JacobianMode.AUTO:
        return JacobianMode.ANALYTIC if expr.has_analytic else JacobianMode.FINITE_DIFFERENCE
    if mode is JacobianMode.ANALYTIC and not expr.has_analytic:
        raise DilationError(f"{expr.kind_name} has no analytic Jacobian; use finite differences")
    return mode


def check_frames(F: np.ndarray, tol: float = FRAME_TOL) -> None:
    """Raise FrameError unless every (ambient, dim) frame in the stack is orthonormal."""
    gram = np.einsum("nai,naj->nij", F, F)
    deviation = float(np.max(np.abs(gram - np.eye(F.shape[2])), initial=0.0))
    if deviation > tol:
        raise FrameError(f"tangent frame Gram matrix deviates from the identity by {deviation:.3g}")


def _central_difference(expr: MapNode, X: np.ndarray, Fx: np.ndarray, h: float) -> np.ndarray:
    """Ambient images of the tangent frame vectors, shape (N, out_ambient, dim)."""
    dom = expr.domain
    cols = []
    for i in range(Fx.shape[2]):
        V = h * Fx[:, :, i]
        Xp, Xm = dom.retract(X, V), dom.retract(X, -V)
        # clipping at a cube face shortens the step
        delta = np.einsum("na,na->n", Xp - Xm, Fx[:, :, i])
        cols.append((expr.evaluate(Xp) - expr.evaluate(Xm)) / delta[:, None])
    return np.stack(cols, axis=2)


class _Differential(NamedTuple):
    """df on a frame at step h and at 2h, and where the two agree."""

    at_h: np.ndarray
    at_2h: np.ndarray
    smooth: np.ndarray


class _Stepping(NamedTuple):
    h: float
    tol: float
    closed_form: bool  # use ambient_jacobian wherever a node has one


def _differenced(expr: MapNode, X: np.ndarray, Fx: np.ndarray, step: _Stepping) -> _Differential:
    D = _central_difference(expr, X, Fx, step.h)
    D2 = _central_difference(expr, X, Fx, 2 * step.h)
    size = np.max(np.abs(D), axis=(1, 2), initial=0.0)
    gap = np.max(np.abs(D - D2), axis=(1, 2), initial=0.0)
    return _Differential(D, D2, gap <= step.tol * (1.0 + size))


def _chain(expr: MapNode, X: np.ndarray, Fx: np.ndarray, step: _Stepping) -> _Differential:
    """Differential by the chain rule, each leaf differenced at its own scale."""
    if step.closed_form and expr.has_analytic:
        D = expr.ambient_jacobian(X) @ Fx
        return _Differential(D, D, np.ones(X.shape[0], dtype=bool))
    if isinstance(expr, Compose):
        Y = expr.inner.evaluate(X)
        inner = _chain(expr.inner, X, Fx, step)
        Fy = expr.outer.domain.tangent_frames(Y)
        outer = _chain(expr.outer, Y, Fy, step)
        return _Differential(
            outer.at_h @ np.einsum("nai,naj->nij", Fy, inner.at_h),
            outer.at_2h @ np.einsum("nai,naj->nij", Fy, inner.at_2h),
            inner.smooth & outer.smooth,
        )
    if isinstance(expr, Product):
        return _product_chain(expr, X, step)
    if isinstance(expr, Prop1Map):
        return _construction_chain(expr, X, Fx, step)
    return _differenced(expr, X, Fx, step)


def _product_chain(expr: Product, X: np.ndarray, step: _Stepping) -> _Differential:
    split = expr.first.domain.dim
    parts = [
        _chain(factor, Xf, factor.domain.tangent_frames(Xf), step)
        for factor, Xf in ((expr.first, X[:, :split]), (expr.second, X[:, split:]))
    ]
    rows = parts[0].at_h.shape[1]
    out = []
    for attr in ("at_h", "at_2h"):
        first, second = (getattr(part, attr) for part in parts)
        D = np.zeros((X.shape[0], rows + second.shape[1], split + second.shape[2]))
        D[:, :rows, :split] = first
        D[:, rows:, split:] = second
        out.append(D)
    return _Differential(out[0], out[1], parts[0].smooth & parts[1].smooth)


def _construction_chain(expr: Prop1Map, X: np.ndarray, Fx: np.ndarray, step: _Stepping) -> _Differential:
    """Body differential times the inverse chart differential on the rectangle; zero off it."""
    N = X.shape[0]
    D = np.zeros((N, expr.codomain.ambient_dim, expr.domain.dim))
    D2 = D.copy()
    smooth = np.ones(N, dtype=bool)
    inside, R = expr.chart.inverse(X)
    if inside.any():
        Ri = R[inside]
        cube_frames = expr.chart.domain.tangent_frames(Ri)
        chart = _chain(expr.chart, Ri, cube_frames, step)
        body = _chain(expr.body, Ri, cube_frames, step)
        # frame vectors at x pulled back to the rectangle
        pull = np.linalg.inv(np.einsum("nai,naj->nij", Fx[inside], chart.at_h))
        pull2 = np.linalg.inv(np.einsum("nai,naj->nij", Fx[inside], chart.at_2h))
        D[inside] = body.at_h @ pull
        D2[inside] = body.at_2h @ pull2
        smooth[inside] = body.smooth & chart.smooth
    return _Differential(D, D2, smooth)


def differential_pair(
    expr: MapNode,
    X: np.ndarray,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    nonsmooth_tol: float = NONSMOOTH_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """df applied to the domain frame at steps h and 2h.

    Returns (D, D2, Fx, smooth): D and D2 have shape (N, out_ambient, dim)
    with column i the ambient image of frame vector i; Fx are the domain
    frames; smooth marks points where every differenced node agrees at h
    and 2h. Compositions, products and the construction are differentiated
    by the chain rule. In auto mode leaves with a closed form use it; in
    finite-difference mode every leaf is differenced.
    """
    X = expr.domain.check_points(X)
    Fx = expr.domain.tangent_frames(X)
    check_frames(Fx)
    requested = JacobianMode(mode)
    resolved = resolve_mode(expr, requested)
    if resolved is JacobianMode.ANALYTIC:
        D = expr.ambient_jacobian(X) @ Fx
        return D, D, Fx, np.ones(X.shape[0], dtype=bool)
    d = _chain(expr, X, Fx, _Stepping(h, nonsmooth_tol, closed_form=requested is JacobianMode.AUTO))
    return d.at_h, d.at_2h, Fx, d.smooth


def tangent_differentials(
    expr: MapNode,
    X: np.ndarray,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    nonsmooth_tol: float = NONSMOOTH_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(D, Fx, smooth) of differential_pair."""
    D, _, Fx, smooth = differential_pair(expr, X, mode, h, nonsmooth_tol)
    return D, Fx, smooth


def _in_codomain_frames(expr: MapNode, X: np.ndarray, D: np.ndarray) -> np.ndarray:
    Fy = expr.codomain.tangent_frames(expr.evaluate(X))
    check_frames(Fy)
    return np.einsum("nao,nai->noi", Fy, D)


def frame_jacobian_pair(
    expr: MapNode,
    X: np.ndarray,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    nonsmooth_tol: float = NONSMOOTH_TOL,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frame differentials at h and 2h, shape (N, out_dim, in_dim), plus the smooth mask."""
    D, D2, _, smooth = differential_pair(expr, X, mode, h, nonsmooth_tol)
    X = expr.domain.check_points(X)
    return _in_codomain_frames(expr, X, D), _in_codomain_frames(expr, X, D2), smooth


def frame_jacobians(
    expr: MapNode,
    X: np.ndarray,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    nonsmooth_tol: float = NONSMOOTH_TOL,
) -> tuple[np.ndarray, np.ndarray]:
    """Differentials in domain and codomain frames, shape (N, out_dim, in_dim), plus the smooth mask."""
    D, _, _, smooth = differential_pair(expr, X, mode, h, nonsmooth_tol)
    return _in_codomain_frames(expr, expr.domain.check_points(X), D), smooth


def jacobian(
    expr: MapNode,
    x: Any,
    mode: JacobianMode | str = JacobianMode.AUTO,
    h: float = FD_STEP,
    nonsmooth_tol: float = NONSMOOTH_TOL,
) -> JacobianSample:
    """df at a single point, with its singular values padded to the domain dimension."""
    X = np.asarray(x, dtype=float).reshape(1, -1)
    resolved = resolve_mode(expr, mode)
    J, smooth = frame_jacobians(expr, X, mode, h, nonsmooth_tol)
    if not smooth[0]:
        raise NonSmoothPointError(f"{expr.kind_name} is not smooth within {2 * h:g} of {X[0].tolist()}")
    s = padded_singular_values(J)[0]
    return JacobianSample(
        point=tuple(float(v) for v in X[0]),
        matrix=tuple(tuple(float(v) for v in row) for row in J[0]),
        singular_values=tuple(float(v) for v in s),
        mode=resolved,
        step=h if resolved is JacobianMode.FINITE_DIFFERENCE else None,
    )
