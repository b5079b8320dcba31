"""Primitive maps: Hopf, orthogonal maps, degree wraps, collapses and the smash."""

from typing import Literal

import numpy as np
from pydantic import Field, field_validator, model_validator

from .base import (
    MapNode,
    Space,
    ball_to_sphere,
    cube,
    radial_squash,
    sphere,
    sphere_product,
    sphere_to_ball,
)

# declared Lipschitz bound of every ball-to-sphere collapse built on radial_squash
COLLAPSE_LIPSCHITZ = 6 * np.pi
ORTHOGONALITY_TOL = 1e-12


class Hopf(MapNode):
    """h(a,b,c,d) = (a²+b²−c²−d², 2(ac+bd), 2(bc−ad)) from S³ to S²."""

    kind: Literal["hopf"] = "hopf"

    @property
    def domain(self) -> Space:
        return sphere(3)

    @property
    def codomain(self) -> Space:
        return sphere(2)

    @property
    def lipschitz(self) -> float:
        return 2.0

    @property
    def has_analytic(self) -> bool:
        return True

    def _apply(self, X: np.ndarray) -> np.ndarray:
        a, b, c, d = X.T
        return np.stack([a * a + b * b - c * c - d * d, 2 * (a * c + b * d), 2 * (b * c - a * d)], axis=1)

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        a, b, c, d = X.T
        return 2.0 * np.stack(
            [
                np.stack([a, b, -c, -d], axis=1),
                np.stack([c, d, a, b], axis=1),
                np.stack([-d, c, b, -a], axis=1),
            ],
            axis=1,
        )


class Rotation(MapNode):
    """x ↦ Ax on S^d for an orthogonal A (reflections allowed)."""

    kind: Literal["rotation"] = "rotation"
    matrix: tuple[tuple[float, ...], ...]

    @field_validator("matrix")
    @classmethod
    def _orthogonal(cls, v: tuple[tuple[float, ...], ...]) -> tuple[tuple[float, ...], ...]:
        A = np.asarray(v, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 2:
            raise ValueError(f"rotation needs a square matrix of size >= 2, got shape {A.shape}")
        if np.max(np.abs(A.T @ A - np.eye(A.shape[0]))) > ORTHOGONALITY_TOL:
            raise ValueError("rotation matrix is not orthogonal")
        return v

    @classmethod
    def identity(cls, d: int) -> "Rotation":
        """Identity of S^d."""
        return cls(matrix=tuple(tuple(float(x) for x in row) for row in np.eye(d + 1)))

    @classmethod
    def reflection(cls, d: int, axis: int | None = None) -> "Rotation":
        """Reflection of S^d in the hyperplane orthogonal to e_axis (last axis by default)."""
        A = np.eye(d + 1)
        A[d if axis is None else axis, d if axis is None else axis] = -1.0
        return cls(matrix=tuple(tuple(float(x) for x in row) for row in A))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.matrix, dtype=float)

    @property
    def domain(self) -> Space:
        return sphere(len(self.matrix) - 1)

    @property
    def codomain(self) -> Space:
        return self.domain

    @property
    def lipschitz(self) -> float:
        return 1.0

    @property
    def has_analytic(self) -> bool:
        return True

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return X @ self.array.T

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.array, (X.shape[0], *self.array.shape)).copy()


class DegreeWrap(MapNode):
    """z ↦ |z|·(z/|z|)^d in the plane of two coordinates of S^dim; degree d."""

    kind: Literal["degree_wrap"] = "degree_wrap"
    degree: int
    axes: tuple[int, int] = (0, 1)
    dim: int = Field(default=3, ge=1)

    @model_validator(mode="after")
    def _check_axes(self) -> "DegreeWrap":
        i, j = self.axes
        if i == j or not (0 <= i <= self.dim and 0 <= j <= self.dim):
            raise ValueError(f"axis pair {self.axes} is not two distinct coordinates of S^{self.dim}")
        return self

    @property
    def domain(self) -> Space:
        return sphere(self.dim)

    @property
    def codomain(self) -> Space:
        return sphere(self.dim)

    @property
    def lipschitz(self) -> float:
        return float(max(abs(self.degree), 1))

    @property
    def has_analytic(self) -> bool:
        return True

    def _apply(self, X: np.ndarray) -> np.ndarray:
        i, j = self.axes
        r = np.hypot(X[:, i], X[:, j])
        theta = np.arctan2(X[:, j], X[:, i])
        Y = X.copy()
        Y[:, i] = r * np.cos(self.degree * theta)
        Y[:, j] = r * np.sin(self.degree * theta)
        return Y

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        i, j = self.axes
        d = self.degree
        x, y = X[:, i], X[:, j]
        r = np.hypot(x, y)
        safe = np.where(r > 0, r, 1.0)
        theta = np.arctan2(y, x)
        cd, sd = np.cos(d * theta), np.sin(d * theta)
        J = np.broadcast_to(np.eye(self.dim + 1), (X.shape[0], self.dim + 1, self.dim + 1)).copy()
        J[:, i, i] = (cd * x + d * sd * y) / safe
        J[:, i, j] = (cd * y - d * sd * x) / safe
        J[:, j, i] = (sd * x - d * cd * y) / safe
        J[:, j, j] = (sd * y + d * cd * x) / safe
        return J


class CubeCollapse(MapNode):
    """[0,1]^m onto S^m: boundary to e0, centre to -e0, degree 1."""

    kind: Literal["cube_collapse"] = "cube_collapse"
    dim: int = Field(ge=1)

    @property
    def domain(self) -> Space:
        return cube(self.dim)

    @property
    def codomain(self) -> Space:
        return sphere(self.dim)

    @property
    def lipschitz(self) -> float:
        return COLLAPSE_LIPSCHITZ

    def _apply(self, X: np.ndarray) -> np.ndarray:
        Y = 2.0 * X - 1.0
        return ball_to_sphere(radial_squash(Y, np.max(np.abs(Y), axis=1)))


class Rescale(MapNode):
    """Diagonal linear map of boxes, x ↦ (c₁x₁, …, c_dx_d).

    `edges` is the source box (the unit cube when empty); a target box
    whose edges all round to 1 is the unit cube.
    """

    kind: Literal["rescale"] = "rescale"
    factors: tuple[float, ...]
    edges: tuple[float, ...] = ()

    @field_validator("factors")
    @classmethod
    def _nonzero(cls, v: tuple[float, ...]) -> tuple[float, ...]:
        if not v or any(c == 0 or not np.isfinite(c) for c in v):
            raise ValueError(f"rescale factors must be finite and nonzero, got {v}")
        return v

    @model_validator(mode="after")
    def _check_edges(self) -> "Rescale":
        if self.edges and len(self.edges) != len(self.factors):
            raise ValueError(f"{len(self.edges)} source edges for {len(self.factors)} factors")
        return self

    @property
    def source_edges(self) -> np.ndarray:
        return np.asarray(self.edges if self.edges else (1.0,) * len(self.factors), dtype=float)

    @property
    def domain(self) -> Space:
        return cube(len(self.factors), self.edges)

    @property
    def codomain(self) -> Space:
        target = np.abs(np.asarray(self.factors)) * self.source_edges
        if np.allclose(target, 1.0, rtol=1e-12, atol=0.0):
            return cube(len(self.factors))
        return cube(len(self.factors), tuple(float(e) for e in target))

    @property
    def lipschitz(self) -> float:
        return float(max(abs(c) for c in self.factors))

    @property
    def has_analytic(self) -> bool:
        return True

    def _apply(self, X: np.ndarray) -> np.ndarray:
        c = np.asarray(self.factors)
        # a negative factor reflects the axis back into [0, |c|·edge]
        return np.where(c > 0, X * c, np.abs(c) * self.source_edges + X * c)

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        return np.broadcast_to(np.diag(self.factors), (X.shape[0], len(self.factors), len(self.factors))).copy()


class Smash(MapNode):
    """S^n × S^p onto S^(n+p), collapsing the wedge to e0 with degree 1.

    Each factor is read as a ball point through sphere_to_ball; the pair
    lives in the product of balls, whose max-norm unit ball is pushed onto
    the Euclidean one before ball_to_sphere.
    """

    kind: Literal["smash"] = "smash"
    n: int = Field(ge=1)
    p: int = Field(ge=1)

    @property
    def domain(self) -> Space:
        return sphere_product(self.n, self.p)

    @property
    def codomain(self) -> Space:
        return sphere(self.n + self.p)

    @property
    def lipschitz(self) -> float:
        return COLLAPSE_LIPSCHITZ

    def _apply(self, X: np.ndarray) -> np.ndarray:
        A = sphere_to_ball(X[:, : self.n + 1])
        B = sphere_to_ball(X[:, self.n + 1 :])
        outer = np.maximum(np.linalg.norm(A, axis=1), np.linalg.norm(B, axis=1))
        return ball_to_sphere(radial_squash(np.concatenate([A, B], axis=1), outer))


class Constant(MapNode):
    """Everything to the basepoint of a sphere."""

    kind: Literal["constant"] = "constant"
    source: Space = Field(default_factory=lambda: sphere(3))
    target_dim: int = Field(default=2, ge=1)

    @property
    def domain(self) -> Space:
        return self.source

    @property
    def codomain(self) -> Space:
        return sphere(self.target_dim)

    @property
    def lipschitz(self) -> float:
        return 0.0

    @property
    def has_analytic(self) -> bool:
        return True

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.codomain.basepoint(), (X.shape[0], self.target_dim + 1)).copy()

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        return np.zeros((X.shape[0], self.target_dim + 1, self.source.ambient_dim))
