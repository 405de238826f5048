"""Real-trace pipeline: ingestion, window resampling, hourly statistics,
average correlation, and transmission counting under prediction plus
aggregation.

The reference input is the public Intel Berkeley Research Lab format
(whitespace-separated ``date time epoch moteid temperature humidity
light voltage``); a generic ``timestamp,node,value`` CSV with a header
is also accepted. Timestamps are treated as naive local time; days and
hours are cut at the trace's local midnights.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

import numpy as np

from .prediction import threshold_from_accuracy

DAY = 86400.0
_EPOCH = datetime(1970, 1, 1)

_INTEL_FIELDS = {"temperature": 4, "humidity": 5, "light": 6, "voltage": 7}

DEFAULT_ACCURACY_LEVELS = (0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


@dataclass(frozen=True)
class MeasurementTrace:
    """Timestamped per-node readings, sorted by time within each node."""

    times: dict[int, np.ndarray]
    values: dict[int, np.ndarray]
    source: str
    field: str
    skipped_lines: int

    @property
    def node_ids(self) -> list[int]:
        return sorted(self.times)

    def __len__(self) -> int:
        return sum(len(t) for t in self.times.values())


def _parse_stamp(date_s: str, time_s: str) -> float:
    # fractional seconds in the Intel Lab files have arbitrary width,
    # which strict ISO parsing rejects on older Pythons
    frac = 0.0
    if "." in time_s:
        time_s, frac_s = time_s.split(".", 1)
        frac = float("0." + frac_s) if frac_s else 0.0
    dt = datetime.strptime(date_s + " " + time_s, "%Y-%m-%d %H:%M:%S")
    return (dt - _EPOCH).total_seconds() + frac


def _parse_intel_line(parts: list[str], column: int) -> tuple[float, int, float]:
    t = _parse_stamp(parts[0], parts[1])
    return t, int(parts[3]), float(parts[column])


def parse_trace(
    path: str | Path,
    field: str = "temperature",
    nodes: list[int] | None = None,
) -> MeasurementTrace:
    """Read a measurement trace, skipping (and counting) malformed lines.

    ``nodes`` restricts the trace to the given node ids. The format is
    sniffed from the first data line: a header containing "timestamp"
    selects the generic CSV reader, anything else the Intel Lab reader.
    More than half the lines failing to parse is treated as a wrong
    file rather than noise.
    """
    path = Path(path)
    if field not in _INTEL_FIELDS:
        raise ValueError(f"unknown field {field!r}; expected one of {sorted(_INTEL_FIELDS)}")
    column = _INTEL_FIELDS[field]
    wanted = set(nodes) if nodes is not None else None
    times: dict[int, list[float]] = {}
    values: dict[int, list[float]] = {}
    skipped = 0
    total = 0
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        first = fh.readline()
        if not first:
            raise ValueError(f"{path}: empty trace file")
        is_csv = "timestamp" in first.lower() and "," in first
        if not is_csv:
            fh.seek(0)
        if is_csv:
            reader = csv.reader(fh)
            for row in reader:
                if not row:
                    continue
                total += 1
                try:
                    t, node, v = float(row[0]), int(row[1]), float(row[2])
                except (ValueError, IndexError):
                    skipped += 1
                    continue
                if wanted is not None and node not in wanted:
                    continue
                times.setdefault(node, []).append(t)
                values.setdefault(node, []).append(v)
        else:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                total += 1
                try:
                    t, node, v = _parse_intel_line(parts, column)
                except (ValueError, IndexError):
                    skipped += 1
                    continue
                if not math.isfinite(v):
                    skipped += 1
                    continue
                if wanted is not None and node not in wanted:
                    continue
                times.setdefault(node, []).append(t)
                values.setdefault(node, []).append(v)
    if total == 0:
        raise ValueError(f"{path}: no data lines")
    if skipped > total / 2:
        raise ValueError(f"{path}: {skipped} of {total} lines malformed; wrong file or field?")
    sorted_times: dict[int, np.ndarray] = {}
    sorted_values: dict[int, np.ndarray] = {}
    for node in times:
        t = np.asarray(times[node])
        v = np.asarray(values[node])
        order = np.argsort(t, kind="stable")
        sorted_times[node] = t[order]
        sorted_values[node] = v[order]
    return MeasurementTrace(
        times=sorted_times, values=sorted_values, source=str(path), field=field, skipped_lines=skipped
    )


@dataclass(frozen=True)
class ResampledSeries:
    """One value (or NaN) per node per fixed-length window on a day-aligned grid."""

    values: np.ndarray  # (nodes, windows)
    node_ids: tuple[int, ...]
    window: float
    start: float
    days: int

    @property
    def windows(self) -> int:
        return self.values.shape[1]

    @property
    def coverage(self) -> np.ndarray:
        return 1.0 - np.isnan(self.values).mean(axis=1)


def resample(
    trace: MeasurementTrace,
    window: float = 300.0,
    days: int = 8,
    seed: int = 0,
    start: float | None = None,
) -> ResampledSeries:
    """Pick one reading per node per window, uniformly at random.

    Windows with no reading borrow the nearest reading within the same
    hour, and stay missing if the whole hour is silent. ``start``
    defaults to the first midnight with data from every node.
    """
    if window <= 0:
        raise ValueError(f"window must be > 0, got {window}")
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    if not trace.times:
        raise ValueError("trace has no nodes")
    if start is None:
        first = max(t[0] for t in trace.times.values())
        start = math.ceil(first / DAY) * DAY
    n_windows = int(round(days * DAY / window))
    node_ids = tuple(trace.node_ids)
    out = np.full((len(node_ids), n_windows), np.nan)
    rng = np.random.default_rng(np.random.SeedSequence([seed]))
    per_hour = max(1, int(round(3600.0 / window)))
    for i, node in enumerate(node_ids):
        t = trace.times[node]
        v = trace.values[node]
        edges = start + window * np.arange(n_windows + 1)
        lo = np.searchsorted(t, edges[:-1], side="left")
        hi = np.searchsorted(t, edges[1:], side="left")
        for w in range(n_windows):
            if hi[w] > lo[w]:
                out[i, w] = v[rng.integers(lo[w], hi[w])]
        # second pass: empty windows borrow from their hour
        for w in range(n_windows):
            if not np.isnan(out[i, w]):
                continue
            hour = w // per_hour
            h_lo = np.searchsorted(t, start + hour * per_hour * window, side="left")
            h_hi = np.searchsorted(t, start + (hour + 1) * per_hour * window, side="left")
            if h_hi > h_lo:
                center = start + (w + 0.5) * window
                k = h_lo + int(np.argmin(np.abs(t[h_lo:h_hi] - center)))
                out[i, w] = v[k]
    return ResampledSeries(values=out, node_ids=node_ids, window=window, start=start, days=days)


@dataclass(frozen=True)
class HourlyStats:
    """Per-node, per-hour sample mean and standard deviation (n-1 denominator)."""

    mean: np.ndarray  # (nodes, hours)
    std: np.ndarray
    valid: np.ndarray  # hours with >= 2 values per node
    windows_per_hour: int


def hourly_stats(series: ResampledSeries) -> HourlyStats:
    per_hour = max(1, int(round(3600.0 / series.window)))
    n_nodes, n_windows = series.values.shape
    if n_windows % per_hour:
        raise ValueError("window grid does not tile whole hours")
    n_hours = n_windows // per_hour
    blocks = series.values.reshape(n_nodes, n_hours, per_hour)
    counts = np.sum(~np.isnan(blocks), axis=2)
    with np.errstate(invalid="ignore"):
        mean = np.nanmean(blocks, axis=2)
        std = np.nanstd(blocks, axis=2, ddof=1)
    valid = counts >= 2
    mean[counts == 0] = np.nan
    std[~valid] = np.nan
    return HourlyStats(mean=mean, std=std, valid=valid, windows_per_hour=per_hour)


@dataclass(frozen=True)
class TransmissionCount:
    """Root-uplink transmissions for one accuracy level."""

    accuracy: float
    transmissions: int
    usable_windows: int
    pct_of_aggregation: float


@dataclass(frozen=True)
class ValidationCounts:
    rows: tuple[TransmissionCount, ...]
    baseline_no_dps: int
    baseline_aggregation: int
    excluded_hours: int


def count_dps_transmissions(
    series: ResampledSeries,
    stats: HourlyStats,
    accuracy_levels: tuple[float, ...] = DEFAULT_ACCURACY_LEVELS,
) -> ValidationCounts:
    """Count windows where at least one node leaves its acceptance interval.

    The acceptance half-width per node-hour comes from the hourly std
    and the target accuracy; a node's prediction is its node-hour mean.
    Hours lacking statistics for some node are excluded from counting
    (the usable-window denominators reflect that), while the baselines
    stay grid-defined: nodes * windows without any scheme, one uplink
    per window with aggregation alone.
    """
    n_nodes, n_windows = series.values.shape
    per_hour = stats.windows_per_hour
    hour_ok = stats.valid.all(axis=0)
    excluded = int(np.sum(~hour_ok))
    rows = []
    for alpha in accuracy_levels:
        if not 0.0 <= alpha < 1.0:
            raise ValueError(f"accuracy must lie in [0, 1), got {alpha}")
        eps = np.full(stats.std.shape, np.nan)
        ok = stats.valid & (stats.std > 0)
        eps[ok] = stats.std[ok] * (0.0 if alpha == 0.0 else threshold_from_accuracy(alpha, 1.0))
        eps[stats.valid & (stats.std == 0)] = 0.0
        eps_w = np.repeat(eps, per_hour, axis=1)
        mean_w = np.repeat(stats.mean, per_hour, axis=1)
        deviates = np.abs(series.values - mean_w) > eps_w
        deviates &= ~np.isnan(series.values)
        window_ok = np.repeat(hour_ok, per_hour)
        uplink = deviates.any(axis=0) & window_ok
        rows.append(
            TransmissionCount(
                accuracy=alpha,
                transmissions=int(uplink.sum()),
                usable_windows=int(window_ok.sum()),
                pct_of_aggregation=100.0 * float(uplink.sum()) / n_windows,
            )
        )
    return ValidationCounts(
        rows=tuple(rows),
        baseline_no_dps=n_nodes * n_windows,
        baseline_aggregation=n_windows,
        excluded_hours=excluded,
    )


def resampled_correlation_matrix(series: ResampledSeries) -> np.ndarray:
    """Pairwise Pearson correlations over windows where both nodes report."""
    n = len(series.node_ids)
    if n < 2:
        raise ValueError("need at least two nodes for a correlation matrix")
    m = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            both = ~np.isnan(series.values[i]) & ~np.isnan(series.values[j])
            if both.sum() < 3:
                raise ValueError(
                    f"nodes {series.node_ids[i]} and {series.node_ids[j]} share "
                    f"only {int(both.sum())} windows"
                )
            r = np.corrcoef(series.values[i, both], series.values[j, both])[0, 1]
            m[i, j] = m[j, i] = r
    return m
