"""Slot-based simulator over explicit ring trees with correlated Gaussian data.

The MAC is idealized: every node owns one collision-free slot per
measurement interval, so counters depend only on the data and the tree.
Predictions are the true per-node means, making the realized accuracy
exactly the configured one and every analytical expectation falsifiable.

A single run is deterministic given the trace (which carries the only
randomness); independent runs may execute concurrently with their own
seeds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .correlation import CorrelationSpec, as_correlation_matrix, build_equicorrelation_matrix, prob_no_transmission
from .prediction import DpsConfig, threshold_from_accuracy
from .traffic import DisseminationMode

SCHEMES = ("none", "prediction-only", "aggregation-only", "prediction+aggregation")


@dataclass(frozen=True)
class TreeNode:
    id: int
    ring: int
    parent: int | None


@dataclass(frozen=True)
class TreeInstance:
    """Explicit tree realization of a (C, D) ring network; gateway is node 0."""

    nodes: tuple[TreeNode, ...]
    C: int
    D: int
    seed: int = 0

    @cached_property
    def sensor_ids(self) -> np.ndarray:
        return np.array([n.id for n in self.nodes if n.ring > 0], dtype=int)

    @cached_property
    def rings(self) -> np.ndarray:
        return np.array([n.ring for n in self.nodes if n.ring > 0], dtype=int)

    @cached_property
    def _index(self) -> dict[int, int]:
        # sensor id -> column index in trace/counter arrays
        return {int(nid): j for j, nid in enumerate(self.sensor_ids)}

    @cached_property
    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for n in self.nodes:
            if n.parent is not None:
                out[n.parent].append(n.id)
        return out

    @cached_property
    def descendants(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}

        def collect(nid: int) -> list[int]:
            acc: list[int] = []
            for c in self.children[nid]:
                acc.append(c)
                acc.extend(collect(c))
            out[nid] = acc
            return acc

        collect(0)
        return out

    def column(self, node_id: int) -> int:
        return self._index[node_id]


def _split_counts(counts: list[int], k: int) -> list[list[int]]:
    """Split per-ring populations into k near-equal parts, rotating the
    remainder ring by ring so the part totals also stay within one of
    each other."""
    parts = [[0] * len(counts) for _ in range(k)]
    offset = 0
    for ri, c in enumerate(counts):
        q, r = divmod(c, k)
        for j in range(k):
            parts[j][ri] = q
        for j in range(r):
            parts[(offset + j) % k][ri] += 1
        offset = (offset + r) % k
    return parts


def build_tree(C: int, D: int, seed: int = 0) -> TreeInstance:
    """Construct the exact integer realization of the (C, D) ring model.

    Ring d holds exactly (2d-1) C nodes, C branches of D^2 nodes each.
    Children are distributed to parents so sibling subtree sizes differ
    by at most one; the construction is deterministic, the ``seed`` is
    recorded for provenance only.
    """
    if C < 1 or D < 1:
        raise ValueError(f"C and D must be >= 1, got C={C}, D={D}")
    nodes: list[TreeNode] = [TreeNode(0, 0, None)]
    next_id = 1

    def grow(parent_id: int, ring: int, counts: list[int]) -> None:
        nonlocal next_id
        if not counts or counts[0] == 0:
            return
        child_ids = []
        for _ in range(counts[0]):
            nodes.append(TreeNode(next_id, ring + 1, parent_id))
            child_ids.append(next_id)
            next_id += 1
        for cid, part in zip(child_ids, _split_counts(counts[1:], len(child_ids))):
            grow(cid, ring + 1, part)

    branch_counts = [2 * r - 1 for r in range(2, D + 1)]
    for _ in range(C):
        root_id = next_id
        nodes.append(TreeNode(root_id, 1, 0))
        next_id += 1
        grow(root_id, 1, branch_counts)
    return TreeInstance(nodes=tuple(nodes), C=C, D=D, seed=seed)


@dataclass(frozen=True)
class SlotTrace:
    """Synthetic per-slot measurements, one column per sensor node."""

    values: np.ndarray
    means: np.ndarray
    stds: np.ndarray
    f: float
    seed: int

    @property
    def slots(self) -> int:
        return self.values.shape[0]


def generate_measurements(
    spec: CorrelationSpec | float | np.ndarray,
    means: np.ndarray,
    stds: np.ndarray,
    f: float,
    duration: float,
    seed: int = 0,
) -> SlotTrace:
    """Draw jointly Gaussian measurements, one vector per slot.

    The correlation structure is applied through the symmetric matrix
    square root of the correlation matrix, then scaled and shifted per
    node. Deterministic for a given seed.
    """
    means = np.asarray(means, dtype=float)
    stds = np.asarray(stds, dtype=float)
    n = means.shape[0]
    if stds.shape != (n,):
        raise ValueError(f"means and stds must have equal length, got {n} and {stds.shape}")
    if np.any(stds < 0):
        raise ValueError("standard deviations must be >= 0")
    if f <= 0:
        raise ValueError(f"measurement rate f must be > 0, got {f}")
    slots = int(round(duration * f))
    if slots < 1:
        raise ValueError(f"duration * f must be >= 1, got {duration * f}")
    if isinstance(spec, CorrelationSpec):
        sigma = spec.materialize(n)
    elif np.isscalar(spec):
        sigma = build_equicorrelation_matrix(n, float(spec))
    else:
        sigma = as_correlation_matrix(np.asarray(spec, dtype=float))
        if sigma.shape[0] != n:
            raise ValueError(f"correlation matrix is {sigma.shape[0]}x{sigma.shape[0]}, need {n}x{n}")
    vals, vecs = np.linalg.eigh(sigma)
    root = (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    z = rng.standard_normal((slots, n))
    values = means + (z @ root) * stds
    return SlotTrace(values=values, means=means, stds=stds, f=f, seed=seed)


@dataclass(frozen=True)
class SimResult:
    """Per-node tx/rx counters for one scheme over a simulated run."""

    scheme: str
    node_ids: np.ndarray
    rings: np.ndarray
    tx: np.ndarray
    rx: np.ndarray
    slots: int
    periods: int
    seed: int


def _acceptance_widths(cfg: DpsConfig, stds: np.ndarray) -> np.ndarray:
    if cfg.epsilon is not None:
        return np.full(stds.shape, float(cfg.epsilon))
    alpha = cfg.accuracy
    if not isinstance(alpha, (int, float)):
        alpha = np.asarray(list(alpha), dtype=float)
        if alpha.shape != stds.shape:
            raise ValueError("per-node accuracy must list one value per sensor node")
    eps = np.empty(stds.shape)
    alpha_arr = np.broadcast_to(np.asarray(alpha, dtype=float), stds.shape)
    for j, (a, s) in enumerate(zip(alpha_arr, stds)):
        if a >= 1.0 or s == 0.0:
            eps[j] = np.inf
        else:
            eps[j] = threshold_from_accuracy(float(a), float(s))
    return eps


def _dissemination_rounds(slots: int, cfg: DpsConfig) -> int:
    slots_per_period = cfg.f * cfg.T
    return max(1, int(math.ceil(slots / slots_per_period - 1e-9)))


def run(scheme: str, tree: TreeInstance, trace: SlotTrace, cfg: DpsConfig) -> SimResult:
    """Simulate one scheme slot by slot and tally per-node counters.

    Prediction schemes transmit a node's own measurement only when it
    leaves the acceptance interval; aggregation schemes merge everything
    a node heard (plus its own report) into a single uplink packet per
    slot. Model dissemination is injected once per period T for the
    prediction schemes, per the configured mode.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    n = len(tree.sensor_ids)
    if trace.values.ndim != 2 or trace.values.shape[1] != n:
        raise ValueError(
            f"trace has {trace.values.shape[1] if trace.values.ndim == 2 else '?'} columns, "
            f"tree has {n} sensor nodes"
        )
    slots = trace.slots
    desc_cols = {
        nid: np.array([tree.column(c) for c in tree.descendants[nid]], dtype=int)
        for nid in tree.sensor_ids
    }
    child_cols = {
        nid: np.array([tree.column(c) for c in tree.children[nid]], dtype=int)
        for nid in tree.sensor_ids
    }
    tx = np.zeros(n, dtype=np.int64)
    rx = np.zeros(n, dtype=np.int64)

    if scheme == "none":
        for j, nid in enumerate(tree.sensor_ids):
            k = len(desc_cols[nid])
            tx[j] = slots * (k + 1)
            rx[j] = slots * k
    elif scheme == "aggregation-only":
        for j, nid in enumerate(tree.sensor_ids):
            tx[j] = slots
            rx[j] = slots * len(child_cols[nid])
    else:
        eps = _acceptance_widths(cfg, trace.stds)
        mispredict = np.abs(trace.values - trace.means) > eps
        if scheme == "prediction-only":
            per_node = mispredict.sum(axis=0)
            for j, nid in enumerate(tree.sensor_ids):
                from_below = int(per_node[desc_cols[nid]].sum())
                tx[j] = int(per_node[j]) + from_below
                rx[j] = from_below
        else:  # prediction+aggregation
            group_any = np.empty((slots, n), dtype=bool)
            for j, nid in enumerate(tree.sensor_ids):
                cols = np.concatenate(([j], desc_cols[nid]))
                group_any[:, j] = mispredict[:, cols].any(axis=1)
            totals = group_any.sum(axis=0)
            for j, nid in enumerate(tree.sensor_ids):
                tx[j] = int(totals[j])
                rx[j] = int(totals[child_cols[nid]].sum())

    periods = 0
    if scheme in ("prediction-only", "prediction+aggregation") and cfg.mode is not DisseminationMode.INDEPENDENT:
        periods = _dissemination_rounds(slots, cfg)
        for j, nid in enumerate(tree.sensor_ids):
            k = len(desc_cols[nid])
            if cfg.mode is DisseminationMode.GW_UNICAST:
                rx[j] += periods * (k + 1)
                tx[j] += periods * k
            elif cfg.mode is DisseminationMode.SENSOR_CHOSEN:
                tx[j] += periods * (k + 1)
                rx[j] += periods * k
            elif cfg.mode is DisseminationMode.GW_UNICAST_AGGREGATED:
                rx[j] += periods
                tx[j] += periods * len(child_cols[nid])
            elif cfg.mode is DisseminationMode.GW_BROADCAST:
                rx[j] += periods

    return SimResult(
        scheme=scheme,
        node_ids=tree.sensor_ids.copy(),
        rings=tree.rings.copy(),
        tx=tx,
        rx=rx,
        slots=slots,
        periods=periods,
        seed=trace.seed,
    )


@dataclass(frozen=True)
class NodeExpectation:
    """Model mean and variance of one node's counters over a run."""

    node_id: int
    ring: int
    mean_tx: float
    var_tx: float
    mean_rx: float
    var_rx: float
    exact: bool


@dataclass(frozen=True)
class ComparisonRow:
    node_id: int
    ring: int
    counter: str
    simulated: int
    expected: float
    sigma: float
    z: float
    outside_3sigma: bool


def model_expectations(
    tree: TreeInstance,
    scheme: str,
    cfg: DpsConfig,
    rho: float,
    slots: int,
    samples: int = 200_000,
    seed: int = 0,
    rings: list[int] | None = None,
) -> list[NodeExpectation]:
    """Analytical per-node counter expectations for the realized tree.

    Evaluated on the actual integer subtree sizes so that the comparison
    isolates the probabilistic model rather than integerization error.
    Variances account for within-slot correlation between the indicator
    variables a counter sums: under correlated data those sums are
    super-binomial, and a plain binomial interval would flag healthy
    runs.
    """
    if scheme not in SCHEMES:
        raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
    if not isinstance(cfg.accuracy, (int, float)):
        raise ValueError("model expectations need a scalar network-wide accuracy")
    alpha = float(cfg.accuracy)
    periods = 0
    diss_tx = diss_rx = 0
    if scheme in ("prediction-only", "prediction+aggregation") and cfg.mode is not DisseminationMode.INDEPENDENT:
        periods = _dissemination_rounds(slots, cfg)

    pcache: dict[int, float] = {}

    def p_quiet(dim: int) -> float:
        if dim not in pcache:
            pcache[dim] = prob_no_transmission(dim, alpha, rho, samples=samples, seed=seed).p
        return pcache[dim]

    # covariance between two distinct single-node mispredict indicators
    def pair_cov() -> float:
        p_both = 1.0 - 2.0 * alpha + p_quiet(2)
        return p_both - (1.0 - alpha) ** 2

    out = []
    for j, nid in enumerate(tree.sensor_ids):
        ring = int(tree.rings[j])
        if rings is not None and ring not in rings:
            continue
        desc = tree.descendants[nid]
        kids = tree.children[nid]
        k = len(desc)
        if periods:
            if cfg.mode is DisseminationMode.GW_UNICAST:
                diss_tx, diss_rx = periods * k, periods * (k + 1)
            elif cfg.mode is DisseminationMode.SENSOR_CHOSEN:
                diss_tx, diss_rx = periods * (k + 1), periods * k
            elif cfg.mode is DisseminationMode.GW_UNICAST_AGGREGATED:
                diss_tx, diss_rx = periods * len(kids), periods
            elif cfg.mode is DisseminationMode.GW_BROADCAST:
                diss_tx, diss_rx = 0, periods

        if scheme == "none":
            exp = NodeExpectation(nid, ring, slots * (k + 1.0), 0.0, slots * float(k), 0.0, True)
        elif scheme == "aggregation-only":
            exp = NodeExpectation(nid, ring, float(slots), 0.0, slots * float(len(kids)), 0.0, True)
        elif scheme == "prediction-only":
            c2 = pair_cov()
            g = k + 1
            mean_tx = g * (1.0 - alpha)
            var_tx = g * alpha * (1.0 - alpha) + g * (g - 1) * c2
            mean_rx = k * (1.0 - alpha)
            var_rx = k * alpha * (1.0 - alpha) + k * max(k - 1, 0) * c2
            exp = NodeExpectation(
                nid, ring,
                slots * mean_tx + diss_tx, slots * var_tx,
                slots * mean_rx + diss_rx, slots * var_rx,
                False,
            )
        else:  # prediction+aggregation
            p_tx = 1.0 - p_quiet(k + 1)
            var_tx = p_tx * (1.0 - p_tx)
            sizes = [1 + len(tree.descendants[c]) for c in kids]
            p_c = [1.0 - p_quiet(s) for s in sizes]
            mean_rx = sum(p_c)
            var_rx = sum(p * (1.0 - p) for p in p_c)
            for a in range(len(sizes)):
                for b in range(len(sizes)):
                    if a == b:
                        continue
                    p_both = 1.0 - p_quiet(sizes[a]) - p_quiet(sizes[b]) + p_quiet(sizes[a] + sizes[b])
                    var_rx += p_both - p_c[a] * p_c[b]
            exp = NodeExpectation(
                nid, ring,
                slots * p_tx + diss_tx, slots * var_tx,
                slots * mean_rx + diss_rx, slots * var_rx,
                False,
            )
        out.append(exp)
    return out


def compare_with_model(result: SimResult, expectations: list[NodeExpectation]) -> list[ComparisonRow]:
    """Flag counters outside a 3-sigma interval around their model expectation.

    Deterministic schemes must match exactly; stochastic counters use the
    model variance (binomial for single-indicator counters, correlation
    adjusted for sums of indicators).
    """
    idx = {int(nid): j for j, nid in enumerate(result.node_ids)}
    rows = []
    for exp in expectations:
        j = idx[exp.node_id]
        for counter, sim, mean, var in (
            ("tx", int(result.tx[j]), exp.mean_tx, exp.var_tx),
            ("rx", int(result.rx[j]), exp.mean_rx, exp.var_rx),
        ):
            sigma = math.sqrt(var)
            if exp.exact or sigma == 0.0:
                z = 0.0 if sim == mean else math.inf
                flag = sim != mean
            else:
                z = (sim - mean) / sigma
                flag = abs(z) > 3.0
            rows.append(ComparisonRow(exp.node_id, exp.ring, counter, sim, mean, sigma, z, flag))
    return rows
