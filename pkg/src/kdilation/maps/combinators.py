"""Composition, products of cube maps and suspension."""

from typing import TYPE_CHECKING, Literal

import numpy as np
from pydantic import model_validator

from .base import MapError, MapNode, Space, SpaceKind, cube, sphere, sphere_product

if TYPE_CHECKING:
    from .expr import MapExpr


class CompositionError(MapError):
    """Incompatible spaces in a compose or product node."""


class Compose(MapNode):
    """outer ∘ inner."""

    kind: Literal["compose"] = "compose"
    outer: "MapExpr"
    inner: "MapExpr"

    @model_validator(mode="after")
    def _check_spaces(self) -> "Compose":
        if self.inner.codomain != self.outer.domain:
            raise CompositionError(
                f"cannot compose: inner lands in {self.inner.codomain}, outer starts on {self.outer.domain}"
            )
        return self

    @property
    def domain(self) -> Space:
        return self.inner.domain

    @property
    def codomain(self) -> Space:
        return self.outer.codomain

    @property
    def lipschitz(self) -> float:
        return self.outer.lipschitz * self.inner.lipschitz

    @property
    def has_analytic(self) -> bool:
        return self.outer.has_analytic and self.inner.has_analytic

    def _apply(self, X: np.ndarray) -> np.ndarray:
        return self.outer.evaluate(self.inner.evaluate(X))

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        Y = self.inner.evaluate(X)
        return self.outer.ambient_jacobian(Y) @ self.inner.ambient_jacobian(X)

    def support_points(self, count: int, seed: int) -> np.ndarray | None:
        return self.inner.support_points(count, seed)


class Product(MapNode):
    """first × second on the product of their cube domains."""

    kind: Literal["product"] = "product"
    first: "MapExpr"
    second: "MapExpr"

    @model_validator(mode="after")
    def _check_spaces(self) -> "Product":
        for factor in (self.first, self.second):
            if factor.domain.kind is not SpaceKind.CUBE:
                raise CompositionError(f"product factors need cube domains, got {factor.domain}")
        kinds = {self.first.codomain.kind, self.second.codomain.kind}
        if kinds not in ({SpaceKind.SPHERE}, {SpaceKind.CUBE}):
            raise CompositionError("product factors must both land in spheres or both in cubes")
        return self

    @property
    def domain(self) -> Space:
        a, b = self.first.domain, self.second.domain
        edges = tuple(a.edge_array) + tuple(b.edge_array) if (a.edges or b.edges) else ()
        return cube(a.dim + b.dim, tuple(float(e) for e in edges))

    @property
    def codomain(self) -> Space:
        a, b = self.first.codomain, self.second.codomain
        if a.kind is SpaceKind.SPHERE:
            return sphere_product(a.dim, b.dim)
        edges = tuple(a.edge_array) + tuple(b.edge_array) if (a.edges or b.edges) else ()
        return cube(a.dim + b.dim, tuple(float(e) for e in edges))

    @property
    def lipschitz(self) -> float:
        return max(self.first.lipschitz, self.second.lipschitz)

    @property
    def has_analytic(self) -> bool:
        return self.first.has_analytic and self.second.has_analytic

    def _apply(self, X: np.ndarray) -> np.ndarray:
        split = self.first.domain.dim
        return np.concatenate([self.first.evaluate(X[:, :split]), self.second.evaluate(X[:, split:])], axis=1)

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        split = self.first.domain.dim
        J1 = self.first.ambient_jacobian(X[:, :split])
        J2 = self.second.ambient_jacobian(X[:, split:])
        J = np.zeros((X.shape[0], J1.shape[1] + J2.shape[1], J1.shape[2] + J2.shape[2]))
        J[:, : J1.shape[1], : J1.shape[2]] = J1
        J[:, J1.shape[1] :, J1.shape[2] :] = J2
        return J


class Suspend(MapNode):
    """(v, s) ↦ (|v|·e(v/|v|), s): the suspension of e, poles fixed."""

    kind: Literal["suspend"] = "suspend"
    inner: "MapExpr"

    @model_validator(mode="after")
    def _check_spaces(self) -> "Suspend":
        if self.inner.domain.kind is not SpaceKind.SPHERE or self.inner.codomain.kind is not SpaceKind.SPHERE:
            raise CompositionError(
                f"suspension needs a map between spheres, got {self.inner.domain} -> {self.inner.codomain}"
            )
        return self

    @property
    def domain(self) -> Space:
        return sphere(self.inner.domain.dim + 1)

    @property
    def codomain(self) -> Space:
        return sphere(self.inner.codomain.dim + 1)

    @property
    def lipschitz(self) -> float:
        return max(self.inner.lipschitz, 1.0)

    @property
    def has_analytic(self) -> bool:
        return self.inner.has_analytic

    def _split(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        V = X[:, :-1]
        r = np.linalg.norm(V, axis=1)
        # the poles have no equator direction; any unit vector gives the same image
        U = np.divide(V, r[:, None], out=np.zeros_like(V), where=r[:, None] > 0)
        U[r == 0, 0] = 1.0
        return U, r, X[:, -1]

    def _apply(self, X: np.ndarray) -> np.ndarray:
        U, r, s = self._split(X)
        return np.concatenate([r[:, None] * self.inner.evaluate(U), s[:, None]], axis=1)

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        U, _, _ = self._split(X)
        E = self.inner.evaluate(U)
        Je = self.inner.ambient_jacobian(U)
        N, width = U.shape
        P = np.eye(width) - U[:, :, None] * U[:, None, :]
        top = Je @ P + E[:, :, None] * U[:, None, :]
        J = np.zeros((N, E.shape[1] + 1, width + 1))
        J[:, :-1, :-1] = top
        J[:, -1, -1] = 1.0
        return J
