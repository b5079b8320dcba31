"""Folded-slab embedding of the thin rectangle [0,ε]^m × [0,ε^(-m/p)]^p into S^(m+p).

The thin coordinates are shared out among the long ones. Each long
coordinate, with its share of q thin coordinates, is a strip
[0,ε]^q × [0,Λ] whose centre line runs along a boustrophedon of rows of
length 1 sitting on a q-dimensional grid of spacing 3ε. Consecutive rows
are joined by half-turns of centre-line radius 1.5ε, so slabs stay two
thicknesses apart. The product of the strip boxes is placed in the
sphere by a fixed scaled inverse stereographic projection centred at -e0.
"""

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Literal

import numpy as np
from pydantic import Field, model_validator

from .base import MapError, MapNode, Space, cube, sphere

logger = logging.getLogger(__name__)

ROW_LENGTH = 1.0
SPACING = 3.0  # grid spacing in units of ε
ROW_AXIS_HALF_EXTENT = 2.5  # half-length of a strip box along its rows, any ε <= 1
CHART_SCALE = 0.15  # κ·(box radius); keeps the stereographic stretch within 2.3% of its peak
# along-curve stretch on a half-turn is rho/(1.5 eps) with rho in [eps, 2 eps]
TURN_STRETCH_MAX = 4.0 / 3.0
TURN_STRETCH_MIN = 2.0 / 3.0
MEMBERSHIP_TOL = 1e-9

DEFAULT_MAX_ROWS = 200_000
DEFAULT_MAX_EXTENT = 4.0


class ChartCapacityError(MapError):
    """The folded slab does not fit the chart for this ε."""

    def __init__(self, message: str, min_epsilon: float):
        super().__init__(message)
        self.min_epsilon = min_epsilon


@dataclass(frozen=True)
class StripGeometry:
    """Boustrophedon layout of one strip [0,ε]^q × [0,Λ]."""

    q: int
    n: int  # grid points per transverse axis
    rows: int
    grid: np.ndarray  # (rows, q) grid index of every row
    direction: np.ndarray  # (rows,) +1 or -1 along the row axis
    sign: np.ndarray  # (rows, q) orientation of the thin offsets on each row
    turn_axis: np.ndarray  # (rows - 1,) transverse axis a half-turn moves along
    turn_step: np.ndarray  # (rows - 1,) +1 or -1 along that axis


def partition_thin(m: int, p: int) -> list[int]:
    """Thin coordinates per strip, as even as possible, larger shares first."""
    return [m // p + (1 if j < m % p else 0) for j in range(p)]


def row_count(epsilon: float, m: int, p: int) -> int:
    long_edge = epsilon ** (-m / p)
    half = SPACING * epsilon / 2
    period = ROW_LENGTH + math.pi * half
    return max(1, math.ceil((long_edge + math.pi * half) / period - 1e-12))


def grid_size(rows: int, q: int) -> int:
    """Smallest n with n**q >= rows."""
    n = max(1, int(rows ** (1.0 / q)))
    while n**q < rows:
        n += 1
    while n > 1 and (n - 1) ** q >= rows:
        n -= 1
    return n


def transverse_extent(epsilon: float, m: int, p: int) -> float:
    """Largest transverse width over the strips: (n-1)·3ε + ε."""
    rows = row_count(epsilon, m, p)
    return max((grid_size(rows, q) - 1) * SPACING * epsilon + epsilon for q in partition_thin(m, p))


def fits(epsilon: float, m: int, p: int, max_rows: int, max_extent: float) -> bool:
    return row_count(epsilon, m, p) <= max_rows and transverse_extent(epsilon, m, p) <= max_extent


def min_admissible_epsilon(m: int, p: int, max_rows: int, max_extent: float) -> float:
    """Smallest ε (to bisection accuracy) whose slab fits the chart."""
    lo, hi = 1e-12, 1.0
    if not fits(hi, m, p, max_rows, max_extent):
        return math.inf
    for _ in range(80):
        mid = math.sqrt(lo * hi)
        if fits(mid, m, p, max_rows, max_extent):
            hi = mid
        else:
            lo = mid
    return hi


def snake_grid(r: np.ndarray, n: int, q: int) -> np.ndarray:
    """Grid index of row r on the boustrophedon; consecutive rows differ in one axis by one."""
    g = np.empty((r.shape[0], q), dtype=np.int64)
    for a in range(q):
        block = r // n**a
        digit = block % n
        higher = block // n
        g[:, a] = np.where(higher % 2 == 0, digit, n - 1 - digit)
    return g


def snake_index(g: np.ndarray, n: int) -> np.ndarray:
    """Inverse of snake_grid."""
    higher = np.zeros(g.shape[0], dtype=np.int64)
    for a in reversed(range(g.shape[1])):
        digit = np.where(higher % 2 == 0, g[:, a], n - 1 - g[:, a])
        higher = higher * n + digit
    return higher


def _build_strip(q: int, rows: int) -> StripGeometry:
    n = grid_size(rows, q)
    grid = snake_grid(np.arange(rows, dtype=np.int64), n, q)
    direction = np.where(np.arange(rows) % 2 == 0, 1.0, -1.0)
    diff = np.diff(grid, axis=0)
    turn_axis = np.argmax(np.abs(diff), axis=1) if rows > 1 else np.zeros(0, dtype=np.int64)
    turn_step = diff[np.arange(rows - 1), turn_axis].astype(float)
    # every half-turn reverses the thin offset along its own axis
    flips = np.zeros((rows, q), dtype=np.int64)
    if rows > 1:
        flips[1 + np.arange(rows - 1), turn_axis] = 1
    sign = np.where(np.cumsum(flips, axis=0) % 2 == 0, 1.0, -1.0)
    return StripGeometry(
        q=q,
        n=n,
        rows=rows,
        grid=grid,
        direction=direction,
        sign=sign,
        turn_axis=turn_axis,
        turn_step=turn_step,
    )


@lru_cache(maxsize=32)
def chart_geometry(m: int, p: int, epsilon: float) -> tuple[StripGeometry, ...]:
    """Strip layouts for (m, p, ε); capacity is checked by the caller."""
    rows = row_count(epsilon, m, p)
    logger.debug("building folded slab m=%d p=%d eps=%g with %d rows per strip", m, p, epsilon, rows)
    return tuple(_build_strip(q, rows) for q in partition_thin(m, p))


class RectangleChart(MapNode):
    """Embedding of R = [0,ε]^m × [0,ε^(-m/p)]^p into S^(m+p)."""

    kind: Literal["rectangle_chart"] = "rectangle_chart"
    m: int = Field(ge=1)
    p: int = Field(ge=1)
    epsilon: float = Field(gt=0, le=1)
    max_rows: int = Field(default=DEFAULT_MAX_ROWS, ge=1)
    max_extent: float = Field(default=DEFAULT_MAX_EXTENT, ge=1)

    @model_validator(mode="after")
    def _check_capacity(self) -> "RectangleChart":
        if self.m < self.p:
            raise MapError(f"folding needs at least one thin coordinate per long one, got m={self.m}, p={self.p}")
        if not fits(self.epsilon, self.m, self.p, self.max_rows, self.max_extent):
            floor = min_admissible_epsilon(self.m, self.p, self.max_rows, self.max_extent)
            raise ChartCapacityError(
                f"eps={self.epsilon:g} needs {row_count(self.epsilon, self.m, self.p)} rows and width "
                f"{transverse_extent(self.epsilon, self.m, self.p):.3g}; chart allows {self.max_rows} rows and "
                f"width {self.max_extent:g}; smallest admissible eps is {floor:.6g}",
                min_epsilon=floor,
            )
        return self

    @property
    def long_edge(self) -> float:
        """Λ = ε^(-m/p)."""
        return self.epsilon ** (-self.m / self.p)

    @property
    def domain(self) -> Space:
        return cube(self.m + self.p, (self.epsilon,) * self.m + (self.long_edge,) * self.p)

    @property
    def codomain(self) -> Space:
        return sphere(self.m + self.p)

    @property
    def strips(self) -> tuple[StripGeometry, ...]:
        return chart_geometry(self.m, self.p, self.epsilon)

    @property
    def box_radius(self) -> float:
        """Radius of a ball around the box centre containing every admissible slab."""
        return math.sqrt(self.p * ROW_AXIS_HALF_EXTENT**2 + self.m * (self.max_extent / 2) ** 2)

    @property
    def scale(self) -> float:
        """κ of the stereographic placement; depends on (m, p) and the capacity only."""
        return CHART_SCALE / self.box_radius

    @property
    def quasi_isometry_constant(self) -> float:
        """Declared Q: every singular value of the chart differential lies in [1/Q, Q]."""
        kappa = self.scale
        top = 2 * kappa * TURN_STRETCH_MAX
        bottom = 2 * kappa / (1 + CHART_SCALE**2) * TURN_STRETCH_MIN
        return max(top, 1 / bottom)

    @property
    def lipschitz(self) -> float:
        return 2 * self.scale * TURN_STRETCH_MAX

    def _strip_slices(self) -> list[tuple[list[int], int]]:
        """(thin coordinate indices, long coordinate index) of every strip."""
        out, start = [], 0
        for j, q in enumerate(partition_thin(self.m, self.p)):
            out.append((list(range(start, start + q)), self.m + j))
            start += q
        return out

    def _box_centre(self) -> np.ndarray:
        eps = self.epsilon
        centre = []
        for strip in self.strips:
            centre.append(ROW_LENGTH / 2)
            centre.extend([(strip.n - 1) * SPACING * eps / 2] * strip.q)
        return np.asarray(centre)

    def to_box(self, X: np.ndarray) -> np.ndarray:
        """Rectangle points to the folded-slab box, strip blocks in order."""
        eps = self.epsilon
        blocks = []
        for strip, (thin, long) in zip(self.strips, self._strip_slices(), strict=True):
            blocks.append(_fold(strip, eps, X[:, long], X[:, thin] - eps / 2))
        return np.concatenate(blocks, axis=1)

    def from_box(self, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Inverse of to_box: (inside mask, rectangle points; zeros where outside)."""
        eps = self.epsilon
        N = Z.shape[0]
        inside = np.ones(N, dtype=bool)
        R = np.zeros((N, self.m + self.p))
        col = 0
        for strip, (thin, long) in zip(self.strips, self._strip_slices(), strict=True):
            ok, s, W = _unfold(strip, eps, self.long_edge, Z[:, col : col + strip.q + 1])
            inside &= ok
            R[:, long] = s
            R[:, thin] = W + eps / 2
            col += strip.q + 1
        R[~inside] = 0.0
        return inside, np.clip(R, 0.0, self.domain.edge_array)

    def box_jacobian(self, X: np.ndarray) -> np.ndarray:
        """d(to_box)/dR, shape (N, m + p, m + p); one-sided on the row/turn seams."""
        eps = self.epsilon
        J = np.zeros((X.shape[0], self.m + self.p, self.m + self.p))
        row = 0
        for strip, (thin, long) in zip(self.strips, self._strip_slices(), strict=True):
            Js = _fold_jacobian(strip, eps, X[:, long], X[:, thin] - eps / 2)
            rows = slice(row, row + strip.q + 1)
            J[:, rows, long] = Js[:, :, 0]
            J[:, rows, thin] = Js[:, :, 1:]
            row += strip.q + 1
        return J

    @property
    def has_analytic(self) -> bool:
        return True

    def ambient_jacobian(self, X: np.ndarray) -> np.ndarray:
        Zc = self.scale * (self.to_box(X) - self._box_centre())
        den = 1.0 + np.einsum("ni,ni->n", Zc, Zc)
        width = self.m + self.p
        dY = np.empty((X.shape[0], width + 1, width))
        dY[:, 0, :] = 4 * Zc / den[:, None] ** 2
        dY[:, 1:, :] = (
            2 * np.eye(width) / den[:, None, None] - 4 * Zc[:, :, None] * Zc[:, None, :] / den[:, None, None] ** 2
        )
        return dY @ (self.scale * self.box_jacobian(X))

    def _apply(self, X: np.ndarray) -> np.ndarray:
        Zc = self.scale * (self.to_box(X) - self._box_centre())
        rho2 = np.einsum("ni,ni->n", Zc, Zc)
        return np.concatenate([((rho2 - 1) / (rho2 + 1))[:, None], 2 * Zc / (rho2 + 1)[:, None]], axis=1)

    def inverse(self, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Sphere points to (inside mask, rectangle points)."""
        denom = 1.0 - Y[:, 0]
        away = denom > 1e-12
        Zc = np.divide(Y[:, 1:], denom[:, None], out=np.full_like(Y[:, 1:], 1e6), where=away[:, None])
        inside, R = self.from_box(Zc / self.scale + self._box_centre())
        return inside & away, R

    def support_points(self, count: int, seed: int) -> np.ndarray:
        return self.evaluate(self.domain.sample(count, seed))


def _fold(strip: StripGeometry, eps: float, s: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Strip coordinates (arclength s, centred thin offsets W) to box coordinates."""
    half = SPACING * eps / 2
    period = ROW_LENGTH + math.pi * half
    delta = SPACING * eps
    r = np.clip(np.floor(s / period).astype(np.int64), 0, strip.rows - 1)
    along = s - r * period
    d = strip.direction[r]

    P = np.empty((s.shape[0], strip.q + 1))
    P[:, 0] = np.where(d > 0, 0.0, ROW_LENGTH) + d * np.minimum(along, ROW_LENGTH)
    P[:, 1:] = strip.grid[r] * delta + strip.sign[r] * W

    turning = np.nonzero((along > ROW_LENGTH) & (r < strip.rows - 1))[0]
    if turning.size:
        c = r[turning]
        axis = strip.turn_axis[c]
        t = strip.turn_step[c]
        dc = strip.direction[c]
        phi = (along[turning] - ROW_LENGTH) / half
        rho = half - t * strip.sign[c, axis] * W[turning, axis]
        P[turning, 0] = np.where(dc > 0, ROW_LENGTH, 0.0) + rho * dc * np.sin(phi)
        P[turning, 1 + axis] = strip.grid[c, axis] * delta + t * half - rho * t * np.cos(phi)
    return P


def _fold_jacobian(strip: StripGeometry, eps: float, s: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Differential of _fold, shape (N, q + 1, q + 1); column 0 is d/ds, then d/dW."""
    half = SPACING * eps / 2
    period = ROW_LENGTH + math.pi * half
    r = np.clip(np.floor(s / period).astype(np.int64), 0, strip.rows - 1)
    along = s - r * period
    thin = np.arange(strip.q)

    J = np.zeros((s.shape[0], strip.q + 1, strip.q + 1))
    J[:, 0, 0] = np.where(along <= ROW_LENGTH, strip.direction[r], 0.0)
    J[:, 1 + thin, 1 + thin] = strip.sign[r]

    turning = np.nonzero((along > ROW_LENGTH) & (r < strip.rows - 1))[0]
    if turning.size:
        c = r[turning]
        axis = strip.turn_axis[c]
        t = strip.turn_step[c]
        dc = strip.direction[c]
        sa = strip.sign[c, axis]
        phi = (along[turning] - ROW_LENGTH) / half
        rho = half - t * sa * W[turning, axis]
        J[turning, 0, 0] = rho * dc * np.cos(phi) / half
        J[turning, 1 + axis, 0] = rho * t * np.sin(phi) / half
        J[turning, 0, 1 + axis] = -t * sa * dc * np.sin(phi)
        J[turning, 1 + axis, 1 + axis] = sa * np.cos(phi)
    return J


def _unfold(
    strip: StripGeometry, eps: float, long_edge: float, P: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Box coordinates of one strip back to (inside, s, W)."""
    half = SPACING * eps / 2
    period = ROW_LENGTH + math.pi * half
    delta = SPACING * eps
    tol = MEMBERSHIP_TOL
    N = P.shape[0]
    x0, T = P[:, 0], P[:, 1:]

    g = np.clip(np.rint(T / delta), 0, strip.n - 1).astype(np.int64)
    r_raw = snake_index(g, strip.n)
    used = r_raw < strip.rows
    r = np.minimum(r_raw, strip.rows - 1)

    inside = np.zeros(N, dtype=bool)
    s = np.zeros(N)
    W = np.zeros((N, strip.q))

    # rows
    offsets = T - g * delta
    d = strip.direction[r]
    along = np.where(d > 0, x0, ROW_LENGTH - x0)
    s_row = r * period + along
    on_row = (
        used
        & (x0 >= -tol)
        & (x0 <= ROW_LENGTH + tol)
        & np.all(np.abs(offsets) <= eps / 2 + tol, axis=1)
        & (s_row <= long_edge + tol)
    )
    inside |= on_row
    s = np.where(on_row, s_row, s)
    W = np.where(on_row[:, None], strip.sign[r] * offsets, W)

    # half-turns attached to the nearest row, on either side of it
    for c in (r, r - 1):
        valid = used & ~inside & (c >= 0) & (c < strip.rows - 1)
        cc = np.clip(c, 0, max(strip.rows - 2, 0))
        if strip.rows < 2 or not valid.any():
            continue
        axis = strip.turn_axis[cc]
        t = strip.turn_step[cc]
        dc = strip.direction[cc]
        rows_idx = np.arange(N)
        a_coord = x0 - np.where(dc > 0, ROW_LENGTH, 0.0)
        b_coord = T[rows_idx, axis] - (strip.grid[cc, axis] * delta + t * half)
        rho = np.hypot(a_coord, b_coord)
        phi = np.arctan2(np.maximum(dc * a_coord, 0.0), -t * b_coord)
        rest = T - strip.grid[cc] * delta
        rest[rows_idx, axis] = 0.0
        s_turn = cc * period + ROW_LENGTH + phi * half
        hit = (
            valid
            & (dc * a_coord >= -tol)
            & (np.abs(rho - half) <= eps / 2 + tol)
            & np.all(np.abs(rest) <= eps / 2 + tol, axis=1)
            & (s_turn <= long_edge + tol)
        )
        W_turn = strip.sign[cc] * rest
        W_turn[rows_idx, axis] = (half - rho) * t * strip.sign[cc, axis]
        inside |= hit
        s = np.where(hit, s_turn, s)
        W = np.where(hit[:, None], W_turn, W)

    return inside, s, np.clip(W, -eps / 2, eps / 2)
