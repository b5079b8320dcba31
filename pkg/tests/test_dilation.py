"""Tests for Λᵏ norms, Jacobians and the sampled k-dilation."""

import numpy as np
import pytest
from pydantic import ValidationError

from kdilation.dilation import (
    DilationOptions,
    JacobianMode,
    JacobianSample,
    NonSmoothPointError,
    composition_bound_check,
    compound_matrix,
    frame_jacobians,
    interpolation_check,
    interpolation_holds,
    jacobian,
    kdilation,
    lambda_k_norm,
    lambda_k_norms,
    naturality_check,
    pointwise_norms,
    singular_values,
)
from kdilation.maps import Compose, Constant, CubeCollapse, DegreeWrap, Hopf, Rotation, named_construction, sphere


class TestLambdaNorms:
    """Test the exterior power norms."""

    def test_product_of_top_values(self) -> None:
        """Test |Λ²| of (3, 2, 1)."""
        assert lambda_k_norm([3.0, 2.0, 1.0], 2) == 6.0

    def test_k_above_rank(self) -> None:
        """Test that k beyond the number of values gives 0."""
        assert lambda_k_norm([3.0, 2.0], 3) == 0.0

    def test_k_must_be_positive(self) -> None:
        """Test that k=0 is rejected."""
        with pytest.raises(ValueError):
            lambda_k_norm([1.0], 0)

    def test_log_concave_in_k(self) -> None:
        """Test that k ↦ log|Λᵏ| is concave on random sorted values."""
        rng = np.random.default_rng(2)
        for _ in range(50):
            s = -np.sort(-rng.exponential(size=6))
            logs = np.log([lambda_k_norm(s, k) for k in range(1, 7)])
            assert (np.diff(logs, 2) <= 1e-12).all()

    def test_compound_norm(self) -> None:
        """Test that the compound matrix has spectral norm equal to the Λᵏ norm."""
        rng = np.random.default_rng(5)
        total = 0
        for rows in range(1, 7):
            for cols in range(1, 7):
                A = rng.standard_normal((28, rows, cols))
                S = np.linalg.svd(A, compute_uv=False)
                for k in range(1, min(rows, cols) + 1):
                    spectral = np.linalg.norm(compound_matrix(A, k), 2, axis=(-2, -1))
                    assert np.allclose(spectral, lambda_k_norms(S, k), rtol=1e-9, atol=1e-12)
                total += A.shape[0]
        assert total >= 1000

    def test_compound_single_matrix(self) -> None:
        """Test the minors of one 2×3 matrix."""
        A = np.array([[1.0, 2.0, 0.0], [0.0, 1.0, 3.0]])
        assert np.allclose(compound_matrix(A, 2), [[1.0, 3.0, 6.0]])
        assert compound_matrix(A, 3).shape == (0, 1)

    def test_interpolation_holds(self) -> None:
        """Test |Λ^(k+1)| ≤ |Λ^k|^((k+1)/k) on 10⁵ random sorted tuples."""
        rng = np.random.default_rng(9)
        for dim in range(1, 9):
            S = -np.sort(-rng.exponential(size=(12_500, dim)), axis=1)
            assert interpolation_holds(S).all()

    def test_monotone_below_one(self) -> None:
        """Test that |Λᵏ| does not increase with k when every singular value is at most 1."""
        rng = np.random.default_rng(13)
        S = -np.sort(-rng.uniform(size=(10_000, 8)), axis=1)
        S[::7, 0] = 1.0
        norms = np.stack([lambda_k_norms(S, k) for k in range(1, 9)], axis=1)
        assert (np.diff(norms, axis=1) <= 0).all()
        assert (lambda_k_norms(S, 9) == 0).all()

    def test_interpolation_fails_unsorted(self) -> None:
        """Test that an increasing tuple violates the inequality."""
        assert not interpolation_check([1.0, 2.0])


class TestJacobian:
    """Test pointwise differentials."""

    def test_hopf_singular_values(self) -> None:
        """Test that the Hopf map stretches the horizontal plane by 2 and kills the fiber."""
        sample = jacobian(Hopf(), [0.5, 0.5, 0.5, 0.5])
        assert sample.mode is JacobianMode.ANALYTIC
        assert np.allclose(sample.singular_values, [2.0, 2.0, 0.0], atol=1e-12)

    def test_finite_difference_agrees(self) -> None:
        """Test central differences against the analytic differential."""
        x = [0.6, 0.0, 0.0, 0.8]
        analytic = jacobian(Hopf(), x, mode=JacobianMode.ANALYTIC)
        fd = jacobian(Hopf(), x, mode=JacobianMode.FINITE_DIFFERENCE)
        assert fd.step is not None
        assert np.allclose(fd.singular_values, analytic.singular_values, atol=1e-6)

    def test_kink_detected(self) -> None:
        """Test that a point just off the collapse's diagonal kink is flagged."""
        with pytest.raises(NonSmoothPointError):
            jacobian(CubeCollapse(dim=3), [0.75 + 1.5e-5, 0.75, 0.5])

    def test_smooth_cube_point(self) -> None:
        """Test that a point away from the kinks is accepted."""
        sample = jacobian(CubeCollapse(dim=3), [0.6, 0.55, 0.5])
        assert sample.mode is JacobianMode.FINITE_DIFFERENCE
        assert len(sample.singular_values) == 3

    def test_sample_validation(self) -> None:
        """Test that unsorted singular values are rejected."""
        with pytest.raises(ValidationError):
            JacobianSample(point=(1.0,), matrix=((1.0,),), singular_values=(1.0, 2.0), mode=JacobianMode.ANALYTIC)


class TestKDilation:
    """Test the sampled supremum."""

    def test_hopf_two_dilation(self) -> None:
        """Test that the Hopf map has 2-dilation 4."""
        report = kdilation(Hopf(), 2, budget=256)
        assert 3.96 <= report.estimate <= 4.0 + 1e-9
        assert report.lower_bound

    def test_hopf_three_dilation_vanishes(self) -> None:
        """Test that a map into S^2 has zero 3-dilation."""
        assert kdilation(Hopf(), 3, budget=128).estimate == 0.0

    def test_identity(self) -> None:
        """Test that the identity of S^3 has 3-dilation 1."""
        assert kdilation(Rotation.identity(3), 3, budget=128).estimate == pytest.approx(1.0)

    def test_constant(self) -> None:
        """Test that the constant map has zero dilation."""
        report = kdilation(Constant(), 1, budget=64)
        assert report.estimate == 0.0
        assert report.ascent_steps == 0

    def test_degree_wrap_lipschitz(self) -> None:
        """Test that wrap(3) stretches angles by 3."""
        report = kdilation(DegreeWrap(degree=3), 1, budget=256)
        assert report.estimate == pytest.approx(3.0, rel=1e-3)

    def test_budget_monotone(self) -> None:
        """Test that a larger budget never lowers the sampled maximum."""
        expr = Compose(outer=Hopf(), inner=DegreeWrap(degree=2))
        small = kdilation(expr, 1, budget=64, seed=3)
        large = kdilation(expr, 1, budget=256, seed=3)
        assert large.sampled_max >= small.sampled_max
        assert large.estimate >= large.sampled_max

    def test_deterministic(self) -> None:
        """Test that a fixed seed reproduces the report."""
        expr = Compose(outer=Hopf(), inner=DegreeWrap(degree=2))
        assert kdilation(expr, 2, 128, seed=1) == kdilation(expr, 2, 128, seed=1)

    def test_bad_arguments(self) -> None:
        """Test that k and budget must be positive."""
        with pytest.raises(ValueError):
            kdilation(Hopf(), 0, budget=16)
        with pytest.raises(ValueError):
            kdilation(Hopf(), 1, budget=0)

    def test_composition_bound(self) -> None:
        """Test |Λᵏd(g∘f)| ≤ |Λᵏdg|·|Λᵏdf| pointwise."""
        X = sphere(3).sample(128, seed=4)
        for k in (1, 2):
            assert composition_bound_check(Hopf(), DegreeWrap(degree=2), X, k).all()

    def test_construction_within_bound(self) -> None:
        """Test that the suspension construction stays under its predicted bound."""
        options = DilationOptions(max_ascent_passes=20)
        report = kdilation(named_construction("hopf", 1, 0.5), 3, budget=256, options=options)
        assert report.predicted_bound is not None
        assert report.within_predicted_bound
        assert report.estimate > 0


class TestChainRule:
    """Test differentials assembled node by node."""

    @pytest.mark.parametrize(
        "expr",
        [
            Compose(outer=Hopf(), inner=DegreeWrap(degree=2)),
            Compose(outer=DegreeWrap(degree=3), inner=Rotation.reflection(3)),
            Compose(outer=Hopf(), inner=Compose(outer=Rotation.reflection(3), inner=DegreeWrap(degree=2))),
        ],
        ids=["hopf-wrap", "wrap-reflect", "nested"],
    )
    def test_differenced_leaves_match_closed_form(self, expr: Compose) -> None:
        """Test that differencing every leaf reproduces the closed-form composite at 100 points."""
        X = sphere(3).sample(400, seed=6)
        X = X[np.hypot(X[:, 0], X[:, 1]) > 0.3][:100]
        assert X.shape[0] == 100
        analytic, _ = frame_jacobians(expr, X, JacobianMode.ANALYTIC)
        fd, smooth = frame_jacobians(expr, X, JacobianMode.FINITE_DIFFERENCE)
        assert smooth.all()
        assert np.allclose(fd, analytic, atol=1e-5)

    def test_construction_modes_agree(self) -> None:
        """Test that closed-form chart and Hopf leaves agree with differencing them."""
        node = named_construction("hopf", 1, 0.5)
        X = node.support_points(200, seed=2)
        auto, smooth_auto = frame_jacobians(node, X, JacobianMode.AUTO)
        fd, smooth_fd = frame_jacobians(node, X, JacobianMode.FINITE_DIFFERENCE)
        both = smooth_auto & smooth_fd
        assert both.sum() >= 100
        size = np.abs(auto[both]).max(axis=(1, 2))
        gap = np.abs(auto[both] - fd[both]).max(axis=(1, 2))
        assert (gap <= 1e-4 * (1.0 + size)).all()

    def test_fine_construction_norms_agree(self) -> None:
        """Test that |Λ³| at ε = 1/16 agrees between the two modes to a relative 1e-3."""
        node = named_construction("hopf", 1, 0.0625)
        X = node.support_points(256, seed=5)
        auto, smooth_auto = pointwise_norms(node, X, 3, JacobianMode.AUTO)
        fd, smooth_fd = pointwise_norms(node, X, 3, JacobianMode.FINITE_DIFFERENCE)
        both = smooth_auto & smooth_fd & (auto > 0)
        assert both.sum() >= 128
        assert np.allclose(fd[both], auto[both], rtol=1e-3, atol=0.0)

    def test_construction_vanishes_off_chart(self) -> None:
        """Test that the differential is zero, and smooth, away from the rectangle."""
        J, smooth = frame_jacobians(named_construction("hopf", 1, 0.5), np.array([[1.0, 0.0, 0.0, 0.0, 0.0]]))
        assert smooth.all()
        assert np.array_equal(J, np.zeros((1, 3, 4)))


class TestNaturality:
    """Test kdilation(F∘f, k) ≤ Lip(F)^k · kdilation(f, k)."""

    @pytest.mark.parametrize("k", [1, 2])
    def test_hopf_after_wrap(self, k: int) -> None:
        """Test post-composition with the 2-Lipschitz Hopf map."""
        check = naturality_check(Hopf(), DegreeWrap(degree=2), k, budget=256)
        assert check.outer_lipschitz == 2.0
        assert check.passed
        assert check.composed > 0

    def test_isometry_preserves_dilation(self) -> None:
        """Test that a reflection leaves the 3-dilation of wrap(3) unchanged."""
        check = naturality_check(Rotation.reflection(3), DegreeWrap(degree=3), 3, budget=256)
        assert check.passed
        assert check.composed == pytest.approx(check.inner, rel=1e-3)
