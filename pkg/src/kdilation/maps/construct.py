"""Small-dilation representatives of suspended classes: chart, rescale, product, smash."""

import logging
from typing import TYPE_CHECKING, Literal

import numpy as np
from pydantic import computed_field, model_validator

from ..ledger.models import HomotopyClassDescriptor
from .base import MapNode, Space, SpaceKind, cube, sphere
from .chart import DEFAULT_MAX_EXTENT, DEFAULT_MAX_ROWS, RectangleChart
from .combinators import Compose, CompositionError, Product
from .primitives import COLLAPSE_LIPSCHITZ, CubeCollapse, Hopf, Rescale, Smash

if TYPE_CHECKING:
    from .expr import MapExpr

logger = logging.getLogger(__name__)

BASEPOINT_TOL = 1e-9
CONSTRUCTIONS = ("hopf", "collapse")


class Prop1Map(MapNode):
    """S^(m+p) → S^(n+p): x = chart(u, y) ↦ smash(f1(u/ε), f2(y/Λ)), everything else ↦ e0."""

    kind: Literal["prop1"] = "prop1"
    descriptor: HomotopyClassDescriptor
    f1: "MapExpr"
    f2: "MapExpr"
    chart: RectangleChart

    @model_validator(mode="after")
    def _check_factors(self) -> "Prop1Map":
        m, n, p = self.descriptor.m, self.descriptor.n, self.descriptor.p
        if p < 1:
            raise CompositionError("the construction needs at least one suspension")
        expected = {
            "f1": (self.f1, cube(m), sphere(n)),
            "f2": (self.f2, cube(p), sphere(p)),
        }
        for name, (f, dom, cod) in expected.items():
            if f.domain != dom or f.codomain != cod:
                raise CompositionError(f"{name} must map {dom} -> {cod}, got {f.domain} -> {f.codomain}")
        if (self.chart.m, self.chart.p) != (m, p):
            raise CompositionError(
                f"chart is built for (m, p) = ({self.chart.m}, {self.chart.p}), class has ({m}, {p})"
            )
        return self

    @property
    def epsilon(self) -> float:
        return self.chart.epsilon

    @property
    def domain(self) -> Space:
        return sphere(self.descriptor.total_m)

    @property
    def codomain(self) -> Space:
        return sphere(self.descriptor.total_n)

    @property
    def factor_lipschitz(self) -> float:
        """L: a common Lipschitz bound of f1 and f2."""
        return max(self.f1.lipschitz, self.f2.lipschitz)

    @property
    def quasi_isometry_constant(self) -> float:
        return self.chart.quasi_isometry_constant

    @property
    def smash_lipschitz(self) -> float:
        return COLLAPSE_LIPSCHITZ

    @property
    def lipschitz(self) -> float:
        return self.smash_lipschitz * self.quasi_isometry_constant * self.factor_lipschitz / self.epsilon

    def construction_bound(self, k: int) -> float:
        """(Lε⁻¹)^n (Lε^(m/p))^(k−n) for the rescaled product on the rectangle."""
        m, n, p = self.descriptor.m, self.descriptor.n, self.descriptor.p
        L, eps = self.factor_lipschitz, self.epsilon
        return float((L / eps) ** n * (L * eps ** (m / p)) ** (k - n))

    def predicted_bound(self, k: int) -> float:
        """construction_bound(k) times the k-th power of the chart and smash stretch."""
        return float((self.quasi_isometry_constant * self.smash_lipschitz) ** k * self.construction_bound(k))

    @computed_field  # type: ignore[prop-decorator]
    @property
    def body(self) -> Compose:
        """smash ∘ (f1 ∘ rescale × f2 ∘ rescale) on the rectangle R."""
        return construction_body(self.f1, self.f2, self.chart)

    def _apply(self, X: np.ndarray) -> np.ndarray:
        out = np.broadcast_to(self.codomain.basepoint(), (X.shape[0], self.descriptor.total_n + 1)).copy()
        inside, R = self.chart.inverse(X)
        if inside.any():
            out[inside] = self.body.evaluate(R[inside])
        return out

    def support_points(self, count: int, seed: int) -> np.ndarray:
        return self.chart.support_points(count, seed)


def construction_body(f1: "MapExpr", f2: "MapExpr", chart: RectangleChart) -> Compose:
    """The map on the rectangle: both edge groups rescaled to unit cubes, then f1 × f2, then the smash."""
    m, p, eps, long_edge = chart.m, chart.p, chart.epsilon, chart.long_edge
    thin = Compose(outer=f1, inner=Rescale(factors=(1 / eps,) * m, edges=(eps,) * m))
    long = Compose(outer=f2, inner=Rescale(factors=(1 / long_edge,) * p, edges=(long_edge,) * p))
    return Compose(outer=Smash(n=f1.codomain.dim, p=p), inner=Product(first=thin, second=long))


def _check_pointed_boundary(name: str, f: MapNode) -> None:
    """f must send every face of its cube to e0."""
    interior = f.domain.sample(16, seed=0)
    target = f.codomain.basepoint()
    for axis in range(f.domain.dim):
        for value in (0.0, 1.0):
            face = interior.copy()
            face[:, axis] = value
            gap = float(np.max(np.abs(f.evaluate(face) - target)))
            if gap > BASEPOINT_TOL:
                raise CompositionError(
                    f"{name} does not send the face x{axis}={value:g} to the basepoint (gap {gap:.3g})"
                )


def prop1_construct(
    descriptor: HomotopyClassDescriptor,
    f1: "MapExpr",
    f2: "MapExpr",
    epsilon: float,
    max_rows: int = DEFAULT_MAX_ROWS,
    max_extent: float = DEFAULT_MAX_EXTENT,
) -> Prop1Map:
    """Representative of Σ^p a with small k-dilation for k > n + (n/m)p."""
    for name, f in (("f1", f1), ("f2", f2)):
        if f.domain.kind is not SpaceKind.CUBE:
            raise CompositionError(f"{name} must be defined on a cube, got {f.domain}")
    _check_pointed_boundary("f1", f1)
    _check_pointed_boundary("f2", f2)
    chart = RectangleChart(
        m=descriptor.m, p=descriptor.p, epsilon=epsilon, max_rows=max_rows, max_extent=max_extent
    )
    node = Prop1Map(descriptor=descriptor, f1=f1, f2=f2, chart=chart)
    logger.debug(
        "prop1 construction m=%d n=%d p=%d eps=%g: L=%g Q=%g",
        descriptor.m,
        descriptor.n,
        descriptor.p,
        epsilon,
        node.factor_lipschitz,
        node.quasi_isometry_constant,
    )
    return node


def named_construction(
    name: str,
    p: int,
    epsilon: float,
    m: int = 3,
    max_rows: int = DEFAULT_MAX_ROWS,
    max_extent: float = DEFAULT_MAX_EXTENT,
) -> Prop1Map:
    """`hopf`: f1 = hopf ∘ cube_collapse(3); `collapse`: f1 = cube_collapse(m). f2 is cube_collapse(p)."""
    if name == "hopf":
        descriptor = HomotopyClassDescriptor(m=3, n=2, p=p, label="suspended Hopf map", torsion_order=2)
        f1: "MapExpr" = Compose(outer=Hopf(), inner=CubeCollapse(dim=3))
    elif name == "collapse":
        descriptor = HomotopyClassDescriptor(m=m, n=m, p=p, label="identity class", degree=1)
        f1 = CubeCollapse(dim=m)
    else:
        raise CompositionError(f"unknown construction {name!r}, expected one of {', '.join(CONSTRUCTIONS)}")
    return prop1_construct(descriptor, f1, CubeCollapse(dim=p), epsilon, max_rows=max_rows, max_extent=max_extent)
