"""Linking numbers of closed polylines in S³ via the Gauss double sum."""

import itertools
import logging
import math

import numpy as np

from ..maps.base import sphere_frames
from .tracing import HopfMeterError

logger = logging.getLogger(__name__)

ROUNDING_TOL = 0.1
GUARD_FACTOR = 10.0
POLE_CLEARANCE = 0.2
BLOCK = 512
SPHERE_TOL = 1e-6


def _pole_list() -> np.ndarray:
    """The 24 vertices of the 24-cell: ±e_i and (±1, ±1, ±1, ±1)/2, in a fixed order."""
    poles = [sign * row for row in np.eye(4) for sign in (1.0, -1.0)]
    poles.extend(np.asarray(signs) / 2 for signs in itertools.product((1.0, -1.0), repeat=4))
    return np.asarray(poles)


POLES = _pole_list()


class LinkingError(HopfMeterError):
    """The Gauss sum could not be evaluated or did not round to an integer."""


class CurvesTooCoarseError(LinkingError):
    """Edges are long compared with the gap between the curves; trace with a smaller step."""


def _check_polyline(name: str, A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[1] != 4 or A.shape[0] < 3:
        raise LinkingError(f"{name} must be a closed polyline of at least 3 points in R^4, got shape {A.shape}")
    if np.max(np.abs(np.linalg.norm(A, axis=1) - 1.0)) > SPHERE_TOL:
        raise LinkingError(f"{name} does not lie on S^3")
    return A


def _edges(A: np.ndarray) -> np.ndarray:
    return np.roll(A, -1, axis=0) - A


def max_edge(*curves: np.ndarray) -> float:
    return max(float(np.linalg.norm(_edges(c), axis=1).max()) for c in curves)


def min_distance(A: np.ndarray, B: np.ndarray) -> float:
    best = math.inf
    for start in range(0, A.shape[0], BLOCK):
        D = np.linalg.norm(A[start : start + BLOCK, None, :] - B[None, :, :], axis=2)
        best = min(best, float(D.min()))
    return best


def choose_pole(curves: list[np.ndarray]) -> np.ndarray:
    """The entry of POLES farthest from every vertex of every curve."""
    points = np.concatenate(curves, axis=0)
    clearance = np.array([np.linalg.norm(points - pole, axis=1).min() for pole in POLES])
    best = int(np.argmax(clearance))
    if clearance[best] < POLE_CLEARANCE:
        raise LinkingError(f"every projection pole lies within {clearance[best]:.3g} of the curves")
    return POLES[best]


def stereographic(X: np.ndarray, pole: np.ndarray) -> np.ndarray:
    """Projection from `pole` to R³, coordinates in the positive tangent frame at -pole."""
    frame = sphere_frames(-pole[None, :])[0]
    along = X @ pole
    V = (X - along[:, None] * pole[None, :]) / (1.0 - along)[:, None]
    return V @ frame


def gauss_sum(A: np.ndarray, B: np.ndarray) -> float:
    """Midpoint Gauss double sum of two closed polylines in R³, blockwise in a fixed order."""
    dA, dB = _edges(A), _edges(B)
    mA, mB = A + dA / 2, B + dB / 2
    total = 0.0
    for start in range(0, A.shape[0], BLOCK):
        block = slice(start, start + BLOCK)
        r = mA[block, None, :] - mB[None, :, :]
        twist = np.cross(dA[block, None, :], dB[None, :, :])
        total += float(np.sum(np.einsum("ijk,ijk->ij", r, twist) / np.linalg.norm(r, axis=2) ** 3))
    return total / (4 * math.pi)


def linking_value(
    A: np.ndarray, B: np.ndarray, pole: np.ndarray | None = None, guard_factor: float = GUARD_FACTOR
) -> float:
    """Pre-rounding linking number of two disjoint closed polylines on S³."""
    A = _check_polyline("A", A)
    B = _check_polyline("B", B)
    gap, edge = min_distance(A, B), max_edge(A, B)
    if gap <= guard_factor * edge:
        raise CurvesTooCoarseError(f"curves are {gap:.3g} apart with edges up to {edge:.3g}; curves too coarse")
    if pole is None:
        pole = choose_pole([A, B])
    return gauss_sum(stereographic(A, pole), stereographic(B, pole))


def round_linking(value: float) -> int:
    nearest = round(value)
    if abs(value - nearest) > ROUNDING_TOL:
        raise CurvesTooCoarseError(f"linking sum {value:.4f} is not near an integer; curves too coarse")
    return int(nearest)


def linking_number(A: np.ndarray, B: np.ndarray, guard_factor: float = GUARD_FACTOR) -> int:
    """Linking number of two disjoint closed polylines on S³."""
    return round_linking(linking_value(A, B, guard_factor=guard_factor))


def total_linking_value(
    first: list[np.ndarray], second: list[np.ndarray], guard_factor: float = GUARD_FACTOR
) -> float:
    """Sum of pairwise linking values between two families of components, one projection pole for all."""
    if not first or not second:
        return 0.0
    pole = choose_pole(first + second)
    return sum(linking_value(a, b, pole, guard_factor) for a in first for b in second)
