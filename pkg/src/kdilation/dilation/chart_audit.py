"""Measured distortion of the folded-slab chart against its declared Q."""

import logging

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..maps.chart import RectangleChart
from .jacobian import JacobianMode, frame_jacobians
from .svd import padded_singular_values

logger = logging.getLogger(__name__)

# pairs closer than this fraction of ε are compared by distance ratio
NEAR_PAIR_FRACTION = 0.25


class ChartAudit(BaseModel):
    """Stretch factors of the chart on sampled points and near pairs."""

    model_config = ConfigDict(frozen=True)

    epsilon: float
    samples: int
    skipped: int
    max_stretch: float
    min_stretch: float
    measured_q: float
    declared_q: float
    pair_ratio_min: float
    pair_ratio_max: float

    @property
    def passed(self) -> bool:
        q = self.declared_q
        return self.measured_q <= q and 1 / q <= self.pair_ratio_min and self.pair_ratio_max <= q


def _geodesic(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.arccos(np.clip(np.einsum("na,na->n", A, B), -1.0, 1.0))


def chart_audit(chart: RectangleChart, count: int = 4096, seed: int = 0) -> ChartAudit:
    """Singular values of the chart differential and distance ratios of pairs below ε/4 apart."""
    X = chart.domain.sample(count, seed)
    J, smooth = frame_jacobians(chart, X, JacobianMode.FINITE_DIFFERENCE)
    s = padded_singular_values(J[smooth])
    top, bottom = float(s[:, 0].max()), float(s[:, -1].min())

    rng = np.random.default_rng(seed)
    direction = rng.normal(size=X.shape)
    direction /= np.linalg.norm(direction, axis=1, keepdims=True)
    radius = NEAR_PAIR_FRACTION * chart.epsilon * rng.uniform(0.05, 1.0, size=(X.shape[0], 1))
    Xn = chart.domain.retract(X, radius * direction)
    flat = np.linalg.norm(Xn - X, axis=1)
    keep = flat > 0
    ratio = _geodesic(chart.evaluate(X[keep]), chart.evaluate(Xn[keep])) / flat[keep]

    audit = ChartAudit(
        epsilon=chart.epsilon,
        samples=count,
        skipped=int((~smooth).sum()),
        max_stretch=top,
        min_stretch=bottom,
        measured_q=max(top, 1 / bottom),
        declared_q=chart.quasi_isometry_constant,
        pair_ratio_min=float(ratio.min()),
        pair_ratio_max=float(ratio.max()),
    )
    logger.debug(
        "chart audit eps=%g: measured Q %.4g, declared %.4g", chart.epsilon, audit.measured_q, audit.declared_q
    )
    return audit

