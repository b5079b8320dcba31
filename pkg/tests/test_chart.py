"""Tests for the folded-slab chart and the suspension construction."""

import json

import numpy as np
import pytest
from pydantic import ValidationError

from kdilation.dilation import JacobianMode, chart_audit, frame_jacobians
from kdilation.ledger import HomotopyClassDescriptor
from kdilation.maps import (
    ChartCapacityError,
    Compose,
    CompositionError,
    CubeCollapse,
    Hopf,
    Prop1Map,
    RectangleChart,
    Rotation,
    dump_expr,
    evaluate,
    load_expr,
    named_construction,
    prop1_construct,
    sphere,
)
from kdilation.maps.chart import (
    DEFAULT_MAX_EXTENT,
    DEFAULT_MAX_ROWS,
    min_admissible_epsilon,
    partition_thin,
    snake_grid,
    snake_index,
)


@pytest.fixture
def chart() -> RectangleChart:
    """Chart for (m, p) = (3, 1) at ε = 1/2."""
    return RectangleChart(m=3, p=1, epsilon=0.5)


@pytest.fixture
def suspended_hopf() -> Prop1Map:
    """The hopf construction for p = 1 at ε = 1/2."""
    return named_construction("hopf", 1, 0.5)


class TestFoldedSlab:
    """Test the chart geometry."""

    def test_partition(self) -> None:
        """Test that thin coordinates are shared evenly, larger shares first."""
        assert partition_thin(3, 1) == [3]
        assert partition_thin(5, 2) == [3, 2]
        assert partition_thin(4, 4) == [1, 1, 1, 1]

    def test_snake_is_bijective(self) -> None:
        """Test that the boustrophedon index inverts the grid walk."""
        r = np.arange(27)
        g = snake_grid(r, 3, 3)
        assert np.array_equal(snake_index(g, 3), r)
        assert (np.abs(np.diff(g, axis=0)).sum(axis=1) == 1).all()

    def test_domain_edges(self, chart: RectangleChart) -> None:
        """Test that the rectangle is [0,ε]^m × [0,ε^(-m/p)]^p."""
        assert np.allclose(chart.domain.edge_array, [0.5, 0.5, 0.5, 8.0])
        assert chart.codomain == sphere(4)

    def test_inverse(self, chart: RectangleChart) -> None:
        """Test that the chart inverse recovers rectangle points."""
        X = chart.domain.sample(512, seed=0)
        inside, R = chart.inverse(chart.evaluate(X))
        assert inside.all()
        assert np.allclose(R, X, atol=1e-8)

    def test_far_points_are_outside(self, chart: RectangleChart) -> None:
        """Test that the basepoint is not in the chart image."""
        inside, _ = chart.inverse(np.array([[1.0, 0.0, 0.0, 0.0, 0.0]]))
        assert not inside.any()

    def test_capacity(self) -> None:
        """Test that a too-small ε is rejected with the smallest admissible one."""
        floor = min_admissible_epsilon(3, 1, DEFAULT_MAX_ROWS, DEFAULT_MAX_EXTENT)
        assert 0 < floor < 1 / 16
        with pytest.raises(ChartCapacityError) as info:
            RectangleChart(m=3, p=1, epsilon=floor / 2)
        assert info.value.min_epsilon == pytest.approx(floor)

    def test_epsilon_range(self) -> None:
        """Test that ε must lie in (0, 1]."""
        with pytest.raises(ValidationError):
            RectangleChart(m=3, p=1, epsilon=2.0)

    def test_declared_q_independent_of_epsilon(self) -> None:
        """Test that Q depends on (m, p) and the capacity only."""
        a = RectangleChart(m=3, p=1, epsilon=0.5).quasi_isometry_constant
        b = RectangleChart(m=3, p=1, epsilon=0.0625).quasi_isometry_constant
        assert a == b

    def test_closed_form_jacobian(self, chart: RectangleChart) -> None:
        """Test the closed-form chart differential against central differences off the seams."""
        R = chart.domain.sample(512, seed=1)
        analytic, _ = frame_jacobians(chart, R, JacobianMode.ANALYTIC)
        fd, smooth = frame_jacobians(chart, R, JacobianMode.FINITE_DIFFERENCE)
        assert smooth.sum() >= 400
        size = np.abs(analytic[smooth]).max(axis=(1, 2))
        gap = np.abs(analytic[smooth] - fd[smooth]).max(axis=(1, 2))
        assert (gap <= 1e-5 * (1.0 + size)).all()

    def test_audit(self, chart: RectangleChart) -> None:
        """Test that measured stretch stays within the declared Q."""
        audit = chart_audit(chart, count=512, seed=0)
        assert audit.measured_q <= audit.declared_q
        assert audit.passed


class TestConstruction:
    """Test the suspension construction."""

    def test_spaces(self, suspended_hopf: Prop1Map) -> None:
        """Test that the construction maps S^4 to S^3."""
        assert suspended_hopf.domain == sphere(4)
        assert suspended_hopf.codomain == sphere(3)

    def test_basepoint_outside_chart(self, suspended_hopf: Prop1Map) -> None:
        """Test that points off the chart image go to e0."""
        assert np.allclose(evaluate(suspended_hopf, [1.0, 0.0, 0.0, 0.0, 0.0]), [1.0, 0.0, 0.0, 0.0])

    def test_values_on_sphere(self, suspended_hopf: Prop1Map) -> None:
        """Test that images of chart points are unit vectors."""
        Y = suspended_hopf.evaluate(suspended_hopf.support_points(256, seed=0))
        assert np.allclose(np.linalg.norm(Y, axis=1), 1.0)

    def test_bounds(self, suspended_hopf: Prop1Map) -> None:
        """Test that the predicted bound is the rigorous bound times the chart and smash stretch."""
        for k in (2, 3, 4):
            ratio = suspended_hopf.predicted_bound(k) / suspended_hopf.construction_bound(k)
            expected = (suspended_hopf.quasi_isometry_constant * suspended_hopf.smash_lipschitz) ** k
            assert ratio == pytest.approx(expected)

    def test_bound_scaling(self) -> None:
        """Test that halving ε scales the k=3 bound by 2^(-1)."""
        a = named_construction("hopf", 1, 0.5).construction_bound(3)
        b = named_construction("hopf", 1, 0.25).construction_bound(3)
        assert b / a == pytest.approx(0.5)

    def test_collapse_construction(self) -> None:
        """Test the identity-class construction."""
        node = named_construction("collapse", 1, 0.5, m=2)
        assert node.domain == sphere(3)
        assert node.codomain == sphere(3)
        assert node.descriptor.degree == 1

    def test_unknown_construction(self) -> None:
        """Test that an unknown name is rejected."""
        with pytest.raises(CompositionError):
            named_construction("torus", 1, 0.5)

    def test_factors_must_be_pointed(self) -> None:
        """Test that f1 must send the cube boundary to e0."""
        descriptor = HomotopyClassDescriptor(m=3, n=2, p=1)
        swap = Rotation(matrix=((0.0, 0.0, 1.0, 0.0), (0.0, 1.0, 0.0, 0.0), (1.0, 0.0, 0.0, 0.0), (0.0, 0.0, 0.0, 1.0)))
        # boundary goes to hopf(e2) = -e0
        shifted = Compose(outer=Hopf(), inner=Compose(outer=swap, inner=CubeCollapse(dim=3)))
        with pytest.raises(CompositionError):
            prop1_construct(descriptor, shifted, CubeCollapse(dim=1), 0.5)

    def test_factor_spaces(self) -> None:
        """Test that f1 must land in S^n."""
        descriptor = HomotopyClassDescriptor(m=3, n=2, p=1)
        with pytest.raises(CompositionError):
            prop1_construct(descriptor, CubeCollapse(dim=3), CubeCollapse(dim=1), 0.5)

    def test_constant_off_rectangle(self, suspended_hopf: Prop1Map) -> None:
        """Test that at least 1000 sampled points outside the rectangle all go to e0."""
        X = sphere(4).sample(1200, seed=3)
        inside, _ = suspended_hopf.chart.inverse(X)
        outside = X[~inside]
        assert outside.shape[0] >= 1000
        assert np.allclose(suspended_hopf.evaluate(outside), [1.0, 0.0, 0.0, 0.0], rtol=0.0, atol=1e-15)

    def test_body_in_expression_tree(self, suspended_hopf: Prop1Map) -> None:
        """Test that the serialized node carries smash ∘ (f1 ∘ rescale × f2 ∘ rescale)."""
        body = json.loads(dump_expr(suspended_hopf))["body"]
        assert body["kind"] == "compose"
        assert body["outer"]["kind"] == "smash"
        product = body["inner"]
        assert product["kind"] == "product"
        for factor, edge in ((product["first"], 0.5), (product["second"], 8.0)):
            assert factor["kind"] == "compose"
            assert factor["inner"]["kind"] == "rescale"
            assert factor["inner"]["edges"][0] == pytest.approx(edge)
        assert product["first"]["outer"] == json.loads(dump_expr(suspended_hopf.f1))

    def test_body_matches_node_on_rectangle(self, suspended_hopf: Prop1Map) -> None:
        """Test that the node is its body read through the chart."""
        R = suspended_hopf.chart.domain.sample(256, seed=4)
        through_chart = suspended_hopf.evaluate(suspended_hopf.chart.evaluate(R))
        assert np.allclose(through_chart, suspended_hopf.body.evaluate(R), atol=1e-5)

    def test_reload_ignores_body(self, suspended_hopf: Prop1Map) -> None:
        """Test that a dumped construction loads back to an equal node."""
        assert load_expr(dump_expr(suspended_hopf)) == suspended_hopf
