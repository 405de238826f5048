"""Per-node traffic accounting: baseline reporting, downlink rounds, dissemination.

Counts are expectations for a node in ring ``d`` of a homogeneous ring
network. "Transmissions at a node" conventionally means tx + rx, since
both occupy the node's radio; the separate components are kept so that
energy accounting and alternative counting conventions stay possible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .topology import child_ratio, subtree_size


class DisseminationMode(enum.Enum):
    """How prediction models are distributed between gateway and nodes.

    ``INDEPENDENT``
        Gateway and nodes derive identical models from shared history;
        nothing is transmitted.
    ``GW_UNICAST``
        Gateway chooses models and unicasts one packet per node.
    ``SENSOR_CHOSEN``
        Each node chooses its model and unicasts it to the gateway.
    ``GW_UNICAST_AGGREGATED``
        Gateway chooses models; one aggregate packet travels down each
        branch and is split ring by ring.
    ``GW_BROADCAST``
        Gateway broadcasts; every node handles a single packet.
    """

    INDEPENDENT = "independent"
    GW_UNICAST = "gw-unicast"
    SENSOR_CHOSEN = "sensor-chosen"
    GW_UNICAST_AGGREGATED = "gw-unicast-aggregated"
    GW_BROADCAST = "gw-broadcast"


@dataclass(frozen=True)
class TrafficReport:
    """Expected transmissions and receptions at one node over a stated period."""

    tx: float
    rx: float

    def __post_init__(self):
        if self.tx < 0 or self.rx < 0:
            raise ValueError(f"negative traffic counts: tx={self.tx}, rx={self.rx}")

    @property
    def total(self) -> float:
        return self.tx + self.rx


def baseline_node_traffic(d: int, D: int, f: float, T: float) -> TrafficReport:
    """Traffic at a ring-``d`` node when every measurement is reported immediately.

    The node originates one packet per measurement and relays one packet
    per measurement for each of its K_d expected descendants, so over a
    period T it makes (K_d + 1) f T transmissions and K_d f T receptions.
    """
    _check_rate_period(f, T)
    k = subtree_size(d, D)
    return TrafficReport(tx=(k + 1.0) * f * T, rx=k * f * T)


def gw_to_node_traffic(d: int, D: int) -> TrafficReport:
    """Traffic at a ring-``d`` node for one full gateway-to-all-nodes unicast round.

    The node receives one packet addressed to itself plus one per
    descendant, and forwards the descendants' packets.
    """
    k = subtree_size(d, D)
    return TrafficReport(tx=k, rx=k + 1.0)


def dissemination_cost(mode: DisseminationMode, D: int) -> float:
    """Model-dissemination packets handled by a first-ring node, once per period.

    Unicast modes relay a packet per subtree member (2 D^2 - 1 combined
    tx + rx); the aggregated mode handles one downlink aggregate plus one
    split copy per direct child; broadcast touches a single packet.
    """
    tx, rx = dissemination_split(mode, D)
    return tx + rx


def dissemination_split(mode: DisseminationMode, D: int) -> tuple[float, float]:
    """(tx, rx) breakdown of :func:`dissemination_cost` at a first-ring node."""
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    if mode is DisseminationMode.INDEPENDENT:
        return 0.0, 0.0
    if mode is DisseminationMode.GW_UNICAST:
        # D^2 receptions, D^2 - 1 forwards
        return float(D * D - 1), float(D * D)
    if mode is DisseminationMode.SENSOR_CHOSEN:
        # mirror image: own model plus forwarded child models go up
        return float(D * D), float(D * D - 1)
    if mode is DisseminationMode.GW_UNICAST_AGGREGATED:
        return child_ratio(1, D), 1.0
    if mode is DisseminationMode.GW_BROADCAST:
        return 0.0, 1.0
    raise ValueError(f"unknown dissemination mode: {mode!r}")


def _check_rate_period(f: float, T: float) -> None:
    if f <= 0:
        raise ValueError(f"measurement rate f must be > 0, got {f}")
    if T <= 0:
        raise ValueError(f"period T must be > 0, got {T}")
