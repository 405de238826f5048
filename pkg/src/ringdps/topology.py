"""Ring-model arithmetic for homogeneous multi-hop sensor networks.

Nodes are placed in concentric rings around the gateway (ring 0) by hop
distance. Two parameters describe the whole network: the expected number
of neighbors per node ``C`` (unit-disk density) and the number of rings
``D``. Everything here is closed-form and real-valued; expected child
counts and subtree sizes are expectations and deliberately stay
fractional. Rounding to integers happens only where a discrete quantity
is unavoidable (tree realizations, MVN dimensions).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache


@dataclass(frozen=True)
class RingTopology:
    """Homogeneous ring network with C neighbors per node and D rings."""

    C: int
    D: int

    def __post_init__(self):
        if self.C < 1 or self.D < 1:
            raise ValueError(f"C and D must be >= 1, got C={self.C}, D={self.D}")

    def population(self, d: int) -> float:
        return ring_population(self, d)

    def total(self) -> int:
        return total_nodes(self)


def ring_population(topo: RingTopology, d: int) -> float:
    """Expected number of nodes in ring ``d``: 0 for the gateway ring, (2d-1)C otherwise."""
    if d < 0 or d > topo.D:
        raise ValueError(f"ring index {d} outside [0, {topo.D}]")
    if d == 0:
        return 0.0
    return (2 * d - 1) * topo.C


def child_ratio(d: int, D: int) -> float:
    """Expected number of direct children of a ring-``d`` node.

    This is the ratio of consecutive ring populations, (2d+1)/(2d-1),
    independent of the density C. Nodes in the last ring are leaves.
    """
    _check_ring(d, D)
    if d == D:
        return 0.0
    return (2 * d + 1) / (2 * d - 1)


def subtree_size(d: int, D: int) -> float:
    """Expected number of descendants of a ring-``d`` node (the node excluded).

    Defined by the backward recursion K_d = I_d (K_{d+1} + 1) with K_D = 0.
    For the first ring this collapses to D^2 - 1.
    """
    _check_ring(d, D)
    return _subtree_size(d, D)


@lru_cache(maxsize=None)
def _subtree_size(d: int, D: int) -> float:
    k = 0.0
    for ring in range(D - 1, d - 1, -1):
        k = child_ratio(ring, D) * (k + 1.0)
    return k


def total_nodes(topo: RingTopology) -> int:
    """Total node count C * D^2 (the gateway excluded)."""
    return topo.C * topo.D * topo.D


def _check_ring(d: int, D: int) -> None:
    if D < 1:
        raise ValueError(f"D must be >= 1, got {D}")
    if d < 1 or d > D:
        raise ValueError(f"ring index {d} outside [1, {D}]")
