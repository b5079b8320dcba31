"""Tests for the batched Jacobi singular values."""

import numpy as np
import pytest

from kdilation.dilation import padded_singular_values, singular_values


@pytest.fixture
def rng() -> np.random.Generator:
    """Seeded generator."""
    return np.random.default_rng(11)


class TestSingularValues:
    """Test singular_values against LAPACK."""

    @pytest.mark.parametrize("shape", [(50, 4, 3), (50, 3, 5), (20, 2, 2), (10, 1, 4)])
    def test_matches_numpy(self, rng: np.random.Generator, shape: tuple[int, int, int]) -> None:
        """Test tall, wide and square stacks."""
        A = rng.standard_normal(shape)
        expected = np.linalg.svd(A, compute_uv=False)
        assert np.allclose(singular_values(A), expected, atol=1e-12)

    def test_non_increasing(self, rng: np.random.Generator) -> None:
        """Test that values come sorted largest first."""
        s = singular_values(rng.standard_normal((30, 5, 4)))
        assert (np.diff(s, axis=1) <= 0).all()

    def test_rank_deficient(self, rng: np.random.Generator) -> None:
        """Test that repeated columns give exact zeros at the tail."""
        A = rng.standard_normal((8, 4, 2))
        A = np.concatenate([A, A[:, :, :1]], axis=2)
        s = singular_values(A)
        assert np.allclose(s, np.linalg.svd(A, compute_uv=False), atol=1e-12)
        assert np.allclose(s[:, 2], 0.0, atol=1e-12)

    def test_zero_matrix(self) -> None:
        """Test that the zero matrix has zero singular values."""
        assert np.array_equal(singular_values(np.zeros((3, 4, 3))), np.zeros((3, 3)))

    def test_single_matrix(self) -> None:
        """Test that a 2-d input returns a 1-d result."""
        s = singular_values(np.diag([1.0, 3.0, 2.0]))
        assert s.shape == (3,)
        assert np.allclose(s, [3.0, 2.0, 1.0])


class TestPadding:
    """Test padded_singular_values."""

    def test_wide_jacobian_is_padded(self, rng: np.random.Generator) -> None:
        """Test that a (2, 3) differential gets a trailing zero."""
        J = rng.standard_normal((5, 2, 3))
        s = padded_singular_values(J)
        assert s.shape == (5, 3)
        assert np.array_equal(s[:, 2], np.zeros(5))

    def test_tall_jacobian_unchanged(self, rng: np.random.Generator) -> None:
        """Test that a (4, 3) differential keeps three values."""
        J = rng.standard_normal((5, 4, 3))
        assert np.allclose(padded_singular_values(J), singular_values(J))
