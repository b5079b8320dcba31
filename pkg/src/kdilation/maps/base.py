"""Spaces, tangent frames and the base class every map node derives from."""

import logging
import warnings
from abc import ABC, abstractmethod
from enum import Enum
from typing import Any

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import ndtri
from scipy.stats import qmc

from ..errors import KDilationError

logger = logging.getLogger(__name__)

SPHERE_INPUT_TOL = 1e-9
CUBE_INPUT_TOL = 1e-12


class MapError(KDilationError):
    """Base error for map construction and evaluation."""


class DomainError(MapError, ValueError):
    """Points outside the domain of a map."""


class NonFiniteError(MapError, ArithmeticError):
    """An evaluation produced NaN or infinity."""


class SpaceKind(str, Enum):
    """Shape of a domain or codomain."""

    SPHERE = "sphere"
    CUBE = "cube"
    SPHERE_PRODUCT = "sphere-product"


class Space(BaseModel):
    """A unit sphere, an axis-aligned box, or a product of two spheres."""

    model_config = ConfigDict(frozen=True)

    kind: SpaceKind
    dim: int = Field(ge=1)
    edges: tuple[float, ...] = ()  # box edge lengths, empty means the unit cube
    factors: tuple[int, ...] = ()  # sphere dimensions of a product

    @model_validator(mode="after")
    def _check_shape(self) -> "Space":
        if self.edges and (self.kind is not SpaceKind.CUBE or len(self.edges) != self.dim):
            raise ValueError("edge lengths are only given for a cube, one per axis")
        if any(e <= 0 for e in self.edges):
            raise ValueError(f"edge lengths must be positive, got {self.edges}")
        if self.kind is SpaceKind.SPHERE_PRODUCT and sum(self.factors) != self.dim:
            raise ValueError(f"factor dimensions {self.factors} do not add up to {self.dim}")
        return self

    def __str__(self) -> str:
        if self.kind is SpaceKind.SPHERE:
            return f"S^{self.dim}"
        if self.kind is SpaceKind.SPHERE_PRODUCT:
            return " x ".join(f"S^{d}" for d in self.factors)
        if self.edges:
            return " x ".join(f"[0,{e:g}]" for e in self.edges)
        return f"[0,1]^{self.dim}"

    @property
    def ambient_dim(self) -> int:
        """Length of the coordinate vector of a point."""
        if self.kind is SpaceKind.SPHERE:
            return self.dim + 1
        if self.kind is SpaceKind.SPHERE_PRODUCT:
            return self.dim + len(self.factors)
        return self.dim

    @property
    def edge_array(self) -> np.ndarray:
        return np.asarray(self.edges if self.edges else (1.0,) * self.dim, dtype=float)

    def blocks(self) -> list[slice]:
        """Coordinate slices of the sphere factors (one slice for a plain sphere)."""
        if self.kind is SpaceKind.SPHERE:
            return [slice(0, self.dim + 1)]
        if self.kind is SpaceKind.SPHERE_PRODUCT:
            out, start = [], 0
            for d in self.factors:
                out.append(slice(start, start + d + 1))
                start += d + 1
            return out
        return []

    def basepoint(self) -> np.ndarray:
        """e0 on spheres (per factor on products), the origin corner on cubes."""
        point = np.zeros(self.ambient_dim)
        for block in self.blocks():
            point[block.start] = 1.0
        return point

    def check_points(self, X: Any) -> np.ndarray:
        """Return X as a float (N, ambient_dim) array, or raise DomainError."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.ambient_dim:
            raise DomainError(f"expected points of length {self.ambient_dim} for {self}, got shape {X.shape}")
        if not np.isfinite(X).all():
            raise DomainError(f"non-finite coordinates in points of {self}")
        if self.kind is SpaceKind.CUBE:
            edges = self.edge_array
            if (X < -CUBE_INPUT_TOL).any() or (X > edges + CUBE_INPUT_TOL).any():
                raise DomainError(f"points outside {self}")
            return np.clip(X, 0.0, edges)
        for block in self.blocks():
            norms = np.linalg.norm(X[:, block], axis=1)
            if (np.abs(norms - 1.0) > SPHERE_INPUT_TOL).any():
                worst = float(np.max(np.abs(norms - 1.0)))
                raise DomainError(f"points off {self}: norm deviation {worst:.3g}")
        return X

    def project(self, Y: np.ndarray) -> np.ndarray:
        """Renormalize sphere blocks to unit norm; cubes are returned unchanged."""
        if self.kind is SpaceKind.CUBE:
            return Y
        Y = Y.copy()
        for block in self.blocks():
            Y[:, block] /= np.linalg.norm(Y[:, block], axis=1, keepdims=True)
        return Y

    def retract(self, X: np.ndarray, V: np.ndarray) -> np.ndarray:
        """Move from X along ambient tangent vectors V and land back on the space."""
        if self.kind is SpaceKind.CUBE:
            return np.clip(X + V, 0.0, self.edge_array)
        return self.project(X + V)

    def tangent_frames(self, X: np.ndarray) -> np.ndarray:
        """Orthonormal positively oriented tangent frames, shape (N, ambient_dim, dim)."""
        N = X.shape[0]
        if self.kind is SpaceKind.CUBE:
            return np.broadcast_to(np.eye(self.dim), (N, self.dim, self.dim)).copy()
        if self.kind is SpaceKind.SPHERE:
            return sphere_frames(X)
        frames = np.zeros((N, self.ambient_dim, self.dim))
        col = 0
        for block, d in zip(self.blocks(), self.factors, strict=True):
            frames[:, block, col : col + d] = sphere_frames(X[:, block])
            col += d
        return frames

    def sample(self, count: int, seed: int) -> np.ndarray:
        """First `count` points of a scrambled Sobol sequence pushed onto the space."""
        width = self.ambient_dim
        with warnings.catch_warnings():
            # prefixes of one sequence are what make budgets nest
            warnings.simplefilter("ignore", UserWarning)
            U = qmc.Sobol(d=width, scramble=True, seed=seed).random(count)
        if self.kind is SpaceKind.CUBE:
            return U * self.edge_array
        G = ndtri(np.clip(U, 1e-12, 1.0 - 1e-12))
        return self.project(G)


def sphere(d: int) -> Space:
    return Space(kind=SpaceKind.SPHERE, dim=d)


def cube(d: int, edges: tuple[float, ...] = ()) -> Space:
    return Space(kind=SpaceKind.CUBE, dim=d, edges=edges)


def sphere_product(a: int, b: int) -> Space:
    return Space(kind=SpaceKind.SPHERE_PRODUCT, dim=a + b, factors=(a, b))


def sphere_frames(X: np.ndarray) -> np.ndarray:
    """Tangent frames of S^d at unit vectors X via a Householder reflection.

    The reflection sending e_j to -sign(x_j)·x (j the largest coordinate)
    has its remaining columns orthonormal and orthogonal to x. The first
    column is flipped where needed so that det[x, F] > 0.
    """
    N, width = X.shape
    rows = np.arange(N)
    j = np.argmax(np.abs(X), axis=1)
    s = np.where(X[rows, j] >= 0, 1.0, -1.0)
    V = X.copy()
    V[rows, j] += s
    H = np.eye(width) - 2.0 * V[:, :, None] * V[:, None, :] / np.einsum("ni,ni->n", V, V)[:, None, None]
    cols = np.arange(width - 1)[None, :]
    cols = cols + (cols >= j[:, None])
    F = np.take_along_axis(H, np.broadcast_to(cols[:, None, :], (N, width, width - 1)), axis=2)
    orientation = np.linalg.det(np.concatenate([X[:, :, None], F], axis=2))
    F[:, :, 0] *= np.where(orientation < 0, -1.0, 1.0)[:, None]
    return F


class MapNode(BaseModel, ABC):
    """An immutable, vectorized, piecewise-smooth map between spaces."""

    model_config = ConfigDict(frozen=True)

    @property
    @abstractmethod
    def domain(self) -> Space:
        """Space the map is defined on."""

    @property
    @abstractmethod
    def codomain(self) -> Space:
        """Space the map lands in."""

    @property
    def lipschitz(self) -> float:
        """Declared Lipschitz bound (infinite when none is known)."""
        return float("inf")

    @property
    def has_analytic(self) -> bool:
        """Whether ambient_jacobian returns a closed form."""
        return False

    @abstractmethod
    def _apply(self, X: np.ndarray) -> np.ndarray:
        """Raw evaluation on already validated points."""

    def evaluate(self, X: Any) -> np.ndarray:
        """Evaluate on a batch of points of shape (N, ambient_dim)."""
        X = self.domain.check_points(X)
        with np.errstate(invalid="ignore", divide="ignore"):
            Y = self._apply(X)
        if not np.isfinite(Y).all():
            raise NonFiniteError(f"{self.kind_name} produced non-finite values")
        return self.codomain.project(Y)

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        """Closed-form differential in ambient coordinates, shape (N, out, in)."""
        raise NotImplementedError(f"{self.kind_name} has no analytic Jacobian")

    def support_points(self, count: int, seed: int) -> np.ndarray | None:
        """Domain points covering the region where the map is not constant, if known."""
        return None

    @property
    def kind_name(self) -> str:
        return str(getattr(self, "kind", type(self).__name__))


def evaluate(expr: MapNode, x: Any) -> np.ndarray:
    """Evaluate at one point (1-d input) or a batch (2-d input)."""
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        return expr.evaluate(X[None, :])[0]
    return expr.evaluate(X)


def ball_to_sphere(B: np.ndarray) -> np.ndarray:
    """Closed unit ball D^d onto S^d: centre to -e0, the boundary sphere to e0.

    b ↦ (-cos π|b|, sin π|b| · R(b/|b|)) where R negates the first ball
    coordinate, which keeps the degree at +1.
    """
    r = np.linalg.norm(B, axis=1)
    direction = np.divide(B, r[:, None], out=np.zeros_like(B), where=r[:, None] > 0)
    direction[:, 0] = -direction[:, 0]
    return np.concatenate([-np.cos(np.pi * r)[:, None], np.sin(np.pi * r)[:, None] * direction], axis=1)


def sphere_to_ball(X: np.ndarray) -> np.ndarray:
    """Inverse of ball_to_sphere away from e0 (where every boundary point is a preimage)."""
    alpha = np.arccos(np.clip(-X[:, 0], -1.0, 1.0))
    tail = X[:, 1:].copy()
    tail[:, 0] = -tail[:, 0]
    norm = np.linalg.norm(tail, axis=1)
    direction = np.divide(tail, norm[:, None], out=np.zeros_like(tail), where=norm[:, None] > 0)
    return (alpha / np.pi)[:, None] * direction


def radial_squash(B: np.ndarray, outer: np.ndarray) -> np.ndarray:
    """Push the unit ball of a norm onto the Euclidean unit ball: b ↦ outer(b)·b/|b|."""
    euclid = np.linalg.norm(B, axis=1)
    return np.divide(B * outer[:, None], euclid[:, None], out=np.zeros_like(B), where=euclid[:, None] > 0)
