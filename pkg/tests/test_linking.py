"""Tests for linking numbers of polylines on S³."""

import numpy as np
import pytest

from kdilation.hopf import CurvesTooCoarseError, LinkingError, linking_number, linking_value, stereographic
from kdilation.hopf.linking import POLES, choose_pole, round_linking


def circle(first: int, second: int, count: int = 200) -> np.ndarray:
    """cos t · e_first + sin t · e_second, t increasing."""
    t = np.linspace(0, 2 * np.pi, count, endpoint=False)
    X = np.zeros((count, 4))
    X[:, first] = np.cos(t)
    X[:, second] = np.sin(t)
    return X


def subdivide(A: np.ndarray) -> np.ndarray:
    """Insert the normalized midpoint of every edge of a closed polyline."""
    mid = A + np.roll(A, -1, axis=0)
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    return np.stack([A, mid], axis=1).reshape(-1, A.shape[1])


@pytest.fixture
def hopf_link() -> tuple[np.ndarray, np.ndarray]:
    """The two coordinate circles."""
    return circle(0, 1), circle(2, 3)


class TestLinkingNumber:
    """Test the Gauss sum on closed-form circles."""

    def test_coordinate_circles(self, hopf_link: tuple[np.ndarray, np.ndarray]) -> None:
        """Test that the coordinate circles link once, positively."""
        assert linking_number(*hopf_link) == 1

    def test_value_is_near_integer(self, hopf_link: tuple[np.ndarray, np.ndarray]) -> None:
        """Test that the pre-rounding sum is close to 1."""
        assert linking_value(*hopf_link) == pytest.approx(1.0, abs=0.01)

    def test_reversal(self, hopf_link: tuple[np.ndarray, np.ndarray]) -> None:
        """Test that reversing one curve negates the linking number."""
        A, B = hopf_link
        assert linking_number(A, B[::-1]) == -1

    def test_symmetric(self, hopf_link: tuple[np.ndarray, np.ndarray]) -> None:
        """Test lk(A, B) = lk(B, A)."""
        A, B = hopf_link
        assert linking_number(B, A) == linking_number(A, B)

    def test_unlinked(self) -> None:
        """Test that two small separate circles do not link."""
        t = np.linspace(0, 2 * np.pi, 100, endpoint=False)
        small = np.stack([np.full_like(t, 0.99), 0.1 * np.cos(t), 0.1 * np.sin(t), 0 * t], axis=1)
        small /= np.linalg.norm(small, axis=1, keepdims=True)
        other = small.copy()
        other[:, 0] *= -1
        assert linking_number(small, other) == 0

    def test_stable_under_subdivision(self, hopf_link: tuple[np.ndarray, np.ndarray]) -> None:
        """Test that halving every edge moves the pre-rounding sum by less than 0.05."""
        A, B = hopf_link
        tilt = np.linalg.qr(np.random.default_rng(3).standard_normal((4, 4)))[0]
        for first, second in ((A, B), (A @ tilt.T, B @ tilt.T), (A, B[::-1])):
            coarse = linking_value(first, second)
            fine = linking_value(subdivide(first), subdivide(second))
            assert abs(fine - coarse) < 0.05
            assert round(fine) == round(coarse)

    def test_too_coarse(self) -> None:
        """Test that long edges next to a small gap are refused."""
        A, B = circle(0, 1, count=6), circle(2, 3, count=6)
        with pytest.raises(CurvesTooCoarseError):
            linking_number(A, B)

    def test_not_on_sphere(self, hopf_link: tuple[np.ndarray, np.ndarray]) -> None:
        """Test that off-sphere polylines are rejected."""
        A, B = hopf_link
        with pytest.raises(LinkingError):
            linking_number(2 * A, B)

    def test_round(self) -> None:
        """Test rounding and its tolerance."""
        assert round_linking(-0.98) == -1
        with pytest.raises(CurvesTooCoarseError):
            round_linking(0.5)


class TestProjection:
    """Test stereographic projection and pole choice."""

    def test_pole_clear_of_curves(self, hopf_link: tuple[np.ndarray, np.ndarray]) -> None:
        """Test that the chosen pole is a listed pole away from both curves."""
        pole = choose_pole(list(hopf_link))
        assert any(np.allclose(pole, p) for p in POLES)
        assert np.linalg.norm(np.concatenate(hopf_link) - pole, axis=1).min() >= 0.2

    def test_antipode_to_origin(self) -> None:
        """Test that -pole projects to the origin."""
        pole = POLES[0]
        assert np.allclose(stereographic(-pole[None, :], pole), 0.0)
