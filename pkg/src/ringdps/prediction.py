"""Dual-prediction traffic model and the Gaussian threshold/accuracy mapping.

Under a dual prediction scheme a node transmits a measurement only when
it deviates from the shared prediction by more than an acceptance
threshold. With accuracy ``alpha`` (probability that a prediction is
acceptable) the per-measurement traffic shrinks by the factor
``1 - alpha``, at the cost of disseminating prediction models once per
period T.

For normally distributed measurements with unbiased predictions, the
accuracy and the acceptance half-width ``epsilon`` determine each other
through the normal CDF of the deviation ``epsilon / sigma``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from scipy.special import ndtr, ndtri

from .topology import subtree_size
from .traffic import DisseminationMode, TrafficReport, dissemination_cost, dissemination_split


@dataclass(frozen=True)
class DpsConfig:
    """Dual-prediction operating point.

    ``accuracy`` is either a single network-wide average or a sequence
    giving the node's own accuracy followed by one value per subtree
    member. ``epsilon`` optionally records the acceptance half-width in
    measurement units; it is not derived from ``accuracy`` here because
    the conversion needs the data's standard deviation.
    """

    accuracy: float | Sequence[float]
    f: float
    T: float
    mode: DisseminationMode = DisseminationMode.INDEPENDENT
    epsilon: float | None = None

    def __post_init__(self):
        alphas = [self.accuracy] if isinstance(self.accuracy, (int, float)) else list(self.accuracy)
        if not alphas:
            raise ValueError("accuracy sequence must not be empty")
        for a in alphas:
            if not 0.0 <= a <= 1.0:
                raise ValueError(f"accuracy must lie in [0, 1], got {a}")
        if self.f <= 0:
            raise ValueError(f"measurement rate f must be > 0, got {self.f}")
        if self.T <= 0:
            raise ValueError(f"period T must be > 0, got {self.T}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValueError(f"acceptance threshold must be >= 0, got {self.epsilon}")


def expected_dps_traffic(cfg: DpsConfig, d: int, D: int) -> TrafficReport:
    """Expected traffic at a ring-``d`` node over one period T under predictions.

    Every imperfect prediction in the node's group (itself plus its
    subtree) triggers one uplink packet, relayed hop by hop without
    aggregation; the model dissemination for the configured mode is
    charged once per period on top.
    """
    if isinstance(cfg.accuracy, (int, float)):
        k = subtree_size(d, D)
        miss = 1.0 - float(cfg.accuracy)
        tx_rate = (1.0 + k) * miss
        rx_rate = k * miss
    else:
        own, *members = [float(a) for a in cfg.accuracy]
        rx_rate = sum(1.0 - a for a in members)
        tx_rate = (1.0 - own) + rx_rate
    tx_top, rx_top = dissemination_split(cfg.mode, D)
    return TrafficReport(
        tx=tx_rate * cfg.f * cfg.T + tx_top,
        rx=rx_rate * cfg.f * cfg.T + rx_top,
    )


def min_required_accuracy(D: int, f: float, T: float, mode: DisseminationMode) -> float:
    """Lowest average accuracy at which predictions still reduce first-ring traffic.

    Dissemination overhead X_top must be amortized by the suppressed
    data packets: alpha_min = X_top / ((2 D^2 - 1) f T). Independent
    model generation has no overhead and therefore no accuracy floor;
    for per-node unicast the bound collapses to 1 / (f T).
    """
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    if f * T < 1.0:
        raise ValueError(f"f*T must be >= 1 (at least one measurement per period), got {f * T}")
    x_top = dissemination_cost(mode, D)
    return x_top / ((2.0 * D * D - 1.0) * f * T)


def accuracy_from_threshold(epsilon: float, sigma: float) -> float:
    """Prediction accuracy for acceptance half-width ``epsilon`` on N(mu, sigma^2) data.

    An unbiased prediction is acceptable when the measurement falls in
    [mu - epsilon, mu + epsilon], which a two-sided tail bound turns into
    alpha = 1 - 2 Phi(-epsilon/sigma). A constant signal (sigma = 0) is
    always predicted exactly.
    """
    if epsilon < 0:
        raise ValueError(f"threshold must be >= 0, got {epsilon}")
    if sigma < 0:
        raise ValueError(f"standard deviation must be >= 0, got {sigma}")
    if sigma == 0.0:
        return 1.0
    z = epsilon / sigma
    return min(1.0, max(0.0, 1.0 - 2.0 * float(ndtr(-z))))


def threshold_from_accuracy(alpha: float, sigma: float) -> float:
    """Acceptance half-width that yields accuracy ``alpha``; inverse of the above."""
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"accuracy must lie in [0, 1), got {alpha}")
    if sigma <= 0:
        raise ValueError(f"standard deviation must be > 0, got {sigma}")
    return sigma * float(ndtri((1.0 + alpha) / 2.0))
