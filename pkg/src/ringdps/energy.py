"""Per-node energy estimates from traffic counts and per-operation costs.

The default profile is illustrative: per-packet costs in the right range
for a low-power 802.15.4 radio (a few hundred microjoules per packet)
and a few joules of idle floor over a multi-day period. Real deployments
should measure their own numbers and load them through the CLI config;
only relative savings are meaningful with the defaults.
"""

from __future__ import annotations

from dataclasses import dataclass

from .topology import child_ratio
from .traffic import DisseminationMode, TrafficReport


@dataclass(frozen=True)
class EnergyParams:
    """Energy cost per operation, joules.

    ``payload_scale`` inflates per-packet tx/rx cost for aggregated
    packets, which carry several measurements in one (larger) frame.
    """

    en_tx: float = 2.1e-4
    en_rx: float = 2.3e-4
    en_min: float = 4.0
    payload_scale: float = 8.0

    def __post_init__(self):
        if min(self.en_tx, self.en_rx, self.en_min) < 0:
            raise ValueError("energy costs must be >= 0")
        if self.payload_scale < 1.0:
            raise ValueError(f"payload_scale must be >= 1, got {self.payload_scale}")


DEFAULT_ENERGY_PROFILE = EnergyParams()


def node_energy(
    traffic: TrafficReport,
    params: EnergyParams,
    mode: DisseminationMode,
    d: int,
    D: int,
    aggregated: bool = False,
) -> float:
    """Total energy over the period covered by ``traffic``, joules.

    ``traffic`` must count data packets only; the model-dissemination
    cost is added here per mode. A node at ring ``d`` handles the
    dissemination round as one aggregate exchange with its I_d direct
    children: downstream model choice costs one reception plus I_d
    forwards, upstream choice the mirror image, independent choice
    nothing.
    """
    scale = params.payload_scale if aggregated else 1.0
    i = child_ratio(d, D)
    if mode is DisseminationMode.INDEPENDENT:
        en_top = 0.0
    elif mode is DisseminationMode.SENSOR_CHOSEN:
        en_top = i * params.en_rx + params.en_tx
    else:
        en_top = params.en_rx + i * params.en_tx
    return (
        traffic.tx * params.en_tx * scale
        + traffic.rx * params.en_rx * scale
        + en_top
        + params.en_min
    )
