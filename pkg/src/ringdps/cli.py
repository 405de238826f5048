"""Command-line front end: parameter sweeps, simulator runs, trace validation.

Outputs are plot-ready long tables (CSV by default, JSON on request),
deterministic byte for byte given identical flags and seed. Numeric
column names carry units.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime
from pathlib import Path

import numpy as np

from . import validation
from .correlation import average_correlation, bottleneck_slot_rates, prob_no_transmission
from .energy import DEFAULT_ENERGY_PROFILE, EnergyParams, node_energy
from .prediction import DpsConfig, expected_dps_traffic
from .simulator import SCHEMES, build_tree, compare_with_model, generate_measurements, model_expectations, run
from .topology import child_ratio, subtree_size
from .traffic import DisseminationMode, TrafficReport, baseline_node_traffic, dissemination_split

DEFAULT_D = tuple(range(1, 11))
DEFAULT_ALPHA = (0.5, 0.7, 0.9, 0.95)
DEFAULT_RHO = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
DEFAULT_F = 1.0 / 60.0
DEFAULT_T = 3 * 86400.0

SWEEP_COLUMNS = (
    "C", "D", "alpha", "rho", "f_hz", "T_s", "mode", "scheme",
    "tx_per_T", "rx_per_T", "total_per_T",
    "pct_of_baseline", "pct_of_aggregation", "energy_J",
)

SIM_COLUMNS = (
    "scheme", "node", "ring", "tx_count", "rx_count",
    "tx_expected", "tx_sigma", "tx_z", "tx_flag",
    "rx_expected", "rx_sigma", "rx_z", "rx_flag",
)

VALIDATE_COLUMNS = ("accuracy", "real_pct", "model_pct", "difference_pp")


def _point_seed(master: int, index: int) -> int:
    return int(np.random.SeedSequence([master, index]).generate_state(1)[0])


def sweep_rows(
    C_grid=(3,),
    D_grid=DEFAULT_D,
    alpha_grid=DEFAULT_ALPHA,
    rho_grid=DEFAULT_RHO,
    f: float = DEFAULT_F,
    T: float = DEFAULT_T,
    mode: DisseminationMode = DisseminationMode.GW_UNICAST_AGGREGATED,
    schemes=SCHEMES,
    seed: int = 0,
    samples: int = 1_000_000,
    energy: EnergyParams = DEFAULT_ENERGY_PROFILE,
) -> list[dict]:
    """First-ring traffic and energy for every grid point and scheme.

    All analytical quantities target a first-ring node, the network
    bottleneck. Percentages are relative to the no-optimization scheme
    and to aggregation alone; MVN seeds derive from (seed, point index)
    so the table does not depend on evaluation order.
    """
    for s in schemes:
        if s not in SCHEMES:
            raise ValueError(f"unknown scheme {s!r}; expected one of {SCHEMES}")
    for a in alpha_grid:
        if not 0.0 <= a <= 1.0:
            raise ValueError(f"accuracy must lie in [0, 1], got {a}")
    for r in rho_grid:
        if not 0.0 <= r <= 1.0:
            raise ValueError(f"correlation must lie in [0, 1], got {r}")
    rows = []
    index = 0
    for C in C_grid:
        for D in D_grid:
            fT = f * T
            none_rep = baseline_node_traffic(1, D, f, T)
            i1 = child_ratio(1, D)
            agg_rep = TrafficReport(tx=fT, rx=i1 * fT)
            for alpha in alpha_grid:
                for rho in rho_grid:
                    for scheme in schemes:
                        index += 1
                        cfg = DpsConfig(accuracy=alpha, f=f, T=T, mode=mode)
                        if scheme == "none":
                            data = full = none_rep
                            used_mode, aggregated = DisseminationMode.INDEPENDENT, False
                        elif scheme == "aggregation-only":
                            data = full = agg_rep
                            used_mode, aggregated = DisseminationMode.INDEPENDENT, True
                        elif scheme == "prediction-only":
                            data = expected_dps_traffic(
                                DpsConfig(accuracy=alpha, f=f, T=T, mode=DisseminationMode.INDEPENDENT), 1, D
                            )
                            full = expected_dps_traffic(cfg, 1, D)
                            used_mode, aggregated = mode, False
                        else:  # prediction+aggregation
                            tx_rate, rx_rate, _ = bottleneck_slot_rates(
                                D, alpha, rho, samples=samples, seed=_point_seed(seed, index)
                            )
                            data = TrafficReport(tx=tx_rate * fT, rx=rx_rate * fT)
                            tx_top, rx_top = dissemination_split(mode, D)
                            full = TrafficReport(tx=data.tx + tx_top, rx=data.rx + rx_top)
                            used_mode, aggregated = mode, True
                        rows.append({
                            "C": C,
                            "D": D,
                            "alpha": alpha,
                            "rho": rho,
                            "f_hz": f,
                            "T_s": T,
                            "mode": mode.value,
                            "scheme": scheme,
                            "tx_per_T": full.tx,
                            "rx_per_T": full.rx,
                            "total_per_T": full.total,
                            "pct_of_baseline": 100.0 * full.total / none_rep.total,
                            "pct_of_aggregation": 100.0 * full.total / agg_rep.total,
                            "energy_J": node_energy(data, energy, used_mode, 1, D, aggregated),
                        })
    return rows


def simulate_rows(
    C: int,
    D: int,
    schemes=SCHEMES,
    alpha: float = 0.9,
    rho: float = 0.5,
    f: float = DEFAULT_F,
    T: float = DEFAULT_T,
    mode: DisseminationMode = DisseminationMode.GW_UNICAST_AGGREGATED,
    slots: int | None = None,
    seed: int = 0,
    samples: int = 200_000,
) -> list[dict]:
    """Run the simulator and attach the model-comparison report per node."""
    tree = build_tree(C, D, seed=seed)
    n = len(tree.sensor_ids)
    if slots is None:
        slots = int(round(f * T))
    trace = generate_measurements(rho, np.zeros(n), np.ones(n), f, slots / f, seed=seed)
    cfg = DpsConfig(accuracy=alpha, f=f, T=T, mode=mode)
    rows = []
    for si, scheme in enumerate(schemes):
        if scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {scheme!r}; expected one of {SCHEMES}")
        result = run(scheme, tree, trace, cfg)
        exps = model_expectations(
            tree, scheme, cfg, rho, slots, samples=samples, seed=_point_seed(seed, si)
        )
        report = compare_with_model(result, exps)
        by_node: dict[int, dict] = {}
        for row in report:
            rec = by_node.setdefault(row.node_id, {
                "scheme": scheme, "node": row.node_id, "ring": row.ring,
            })
            rec[f"{row.counter}_expected"] = row.expected
            rec[f"{row.counter}_sigma"] = row.sigma
            rec[f"{row.counter}_z"] = row.z
            rec[f"{row.counter}_flag"] = int(row.outside_3sigma)
        idx = {int(nid): j for j, nid in enumerate(result.node_ids)}
        for nid, rec in by_node.items():
            rec["tx_count"] = int(result.tx[idx[nid]])
            rec["rx_count"] = int(result.rx[idx[nid]])
            rows.append(rec)
    return rows


def validate_rows(
    trace_path: str | Path,
    field: str = "temperature",
    nodes: list[int] | None = None,
    days: int = 8,
    seed: int = 0,
    start: float | None = None,
    accuracy_levels=validation.DEFAULT_ACCURACY_LEVELS,
    samples: int = 1_000_000,
    window: float = 300.0,
) -> tuple[list[dict], dict]:
    """Full trace pipeline plus the MVN model column at the measured correlation.

    Returns (table rows, summary). The model column evaluates the
    no-transmission probability for the traced node group at the
    Fisher-averaged pairwise correlation of the resampled series.
    """
    trace = validation.parse_trace(trace_path, field=field, nodes=nodes)
    series = validation.resample(trace, window=window, days=days, seed=seed, start=start)
    stats = validation.hourly_stats(series)
    counts = validation.count_dps_transmissions(series, stats, tuple(accuracy_levels))
    corr = average_correlation(validation.resampled_correlation_matrix(series))
    n = len(series.node_ids)
    rows = []
    for i, rec in enumerate(counts.rows):
        est = prob_no_transmission(n, rec.accuracy, corr, samples=samples, seed=_point_seed(seed, i))
        model_pct = 100.0 * (1.0 - est.p)
        rows.append({
            "accuracy": rec.accuracy,
            "real_pct": rec.pct_of_aggregation,
            "model_pct": model_pct,
            "difference_pp": model_pct - rec.pct_of_aggregation,
        })
    summary = {
        "nodes": list(series.node_ids),
        "windows": series.windows,
        "average_correlation": corr,
        "baseline_no_dps": counts.baseline_no_dps,
        "baseline_aggregation": counts.baseline_aggregation,
        "excluded_hours": counts.excluded_hours,
        "skipped_lines": trace.skipped_lines,
    }
    return rows, summary


def _format_cell(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def _write_table(rows: list[dict], columns, fmt: str, out: str | None, extra: dict | None = None) -> None:
    if fmt == "json":
        payload = {"rows": rows}
        if extra:
            payload["summary"] = extra
        text = json.dumps(payload, indent=2) + "\n"
    else:
        lines = [",".join(columns)]
        for row in rows:
            lines.append(",".join(_format_cell(row.get(c, "")) for c in columns))
        if extra:
            lines.append("")
            for k, v in extra.items():
                lines.append(f"# {k}={_format_cell(v) if not isinstance(v, list) else v}")
        text = "\n".join(lines) + "\n"
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x != ""]


def _ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x != ""]


def _rate(text: str) -> float:
    if "/" in text:
        num, den = text.split("/")
        return float(num) / float(den)
    return float(text)


def _mode(text: str) -> DisseminationMode:
    try:
        return DisseminationMode(text)
    except ValueError:
        valid = ", ".join(m.value for m in DisseminationMode)
        raise argparse.ArgumentTypeError(f"unknown mode {text!r}; expected one of: {valid}")


def _schemes(text: str) -> tuple[str, ...]:
    if text == "all":
        return SCHEMES
    out = tuple(s.strip() for s in text.split(",") if s.strip())
    for s in out:
        if s not in SCHEMES:
            raise argparse.ArgumentTypeError(f"unknown scheme {s!r}; expected from {SCHEMES}")
    return out


def _start_epoch(text: str) -> float:
    dt = datetime.fromisoformat(text)
    return (dt - datetime(1970, 1, 1)).total_seconds()


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ringdps",
        description="Transmission and energy savings from dual prediction schemes "
        "and aggregation in ring-structured sensor networks.",
    )
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default="-", help="output path, '-' for stdout")
    sub = p.add_subparsers(dest="command", required=True)

    sw = sub.add_parser("sweep", help="analytical parameter sweep over the model grid")
    sw.add_argument("--C", type=_ints, default=[3], help="density grid, comma separated")
    sw.add_argument("--D", type=_ints, default=list(DEFAULT_D), help="ring-count grid")
    sw.add_argument("--alpha", type=_floats, default=list(DEFAULT_ALPHA), help="accuracy grid")
    sw.add_argument("--rho", type=_floats, default=list(DEFAULT_RHO), help="correlation grid")
    sw.add_argument("--f", type=_rate, default=DEFAULT_F, help="measurements per second (accepts a/b)")
    sw.add_argument("--T", type=float, default=DEFAULT_T, help="seconds between model choices")
    sw.add_argument("--mode", type=_mode, default=DisseminationMode.GW_UNICAST_AGGREGATED)
    sw.add_argument("--schemes", type=_schemes, default=SCHEMES)
    sw.add_argument("--seed", type=int, default=0)
    sw.add_argument("--samples", type=int, default=1_000_000, help="MVN Monte Carlo samples per point")
    sw.add_argument("--en-tx", type=float, default=DEFAULT_ENERGY_PROFILE.en_tx, help="J per transmitted packet")
    sw.add_argument("--en-rx", type=float, default=DEFAULT_ENERGY_PROFILE.en_rx, help="J per received packet")
    sw.add_argument("--en-min", type=float, default=DEFAULT_ENERGY_PROFILE.en_min, help="J idle floor per period")
    sw.add_argument("--payload-scale", type=float, default=DEFAULT_ENERGY_PROFILE.payload_scale)

    sim = sub.add_parser("simulate", help="slot simulator with model-comparison report")
    sim.add_argument("--C", type=int, default=3)
    sim.add_argument("--D", type=int, default=5)
    sim.add_argument("--schemes", type=_schemes, default=SCHEMES)
    sim.add_argument("--alpha", type=float, default=0.9)
    sim.add_argument("--rho", type=float, default=0.5)
    sim.add_argument("--f", type=_rate, default=DEFAULT_F)
    sim.add_argument("--T", type=float, default=DEFAULT_T)
    sim.add_argument("--mode", type=_mode, default=DisseminationMode.GW_UNICAST_AGGREGATED)
    sim.add_argument("--slots", type=int, default=None, help="slots to simulate (default: one period)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--samples", type=int, default=200_000)

    va = sub.add_parser("validate", help="trace-driven validation table")
    va.add_argument("--trace", required=True, help="Intel-Lab text file or timestamp,node,value CSV")
    va.add_argument("--field", default="temperature")
    va.add_argument("--nodes", type=_ints, default=[21, 22, 26, 31, 38, 40, 42, 45, 46])
    va.add_argument("--days", type=int, default=8)
    va.add_argument("--window", type=float, default=300.0, help="resampling window, seconds")
    va.add_argument("--seed", type=int, default=0)
    va.add_argument("--start", type=_start_epoch, default=None, help="slice start, ISO date/time")
    va.add_argument("--alpha", type=_floats, default=list(validation.DEFAULT_ACCURACY_LEVELS))
    va.add_argument("--samples", type=int, default=1_000_000)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "sweep":
            rows = sweep_rows(
                C_grid=args.C, D_grid=args.D, alpha_grid=args.alpha, rho_grid=args.rho,
                f=args.f, T=args.T, mode=args.mode, schemes=args.schemes,
                seed=args.seed, samples=args.samples,
                energy=EnergyParams(
                    en_tx=args.en_tx, en_rx=args.en_rx,
                    en_min=args.en_min, payload_scale=args.payload_scale,
                ),
            )
            _write_table(rows, SWEEP_COLUMNS, args.format, args.out)
        elif args.command == "simulate":
            rows = simulate_rows(
                C=args.C, D=args.D, schemes=args.schemes, alpha=args.alpha, rho=args.rho,
                f=args.f, T=args.T, mode=args.mode, slots=args.slots,
                seed=args.seed, samples=args.samples,
            )
            _write_table(rows, SIM_COLUMNS, args.format, args.out)
        else:
            rows, summary = validate_rows(
                args.trace, field=args.field, nodes=args.nodes, days=args.days,
                seed=args.seed, start=args.start, accuracy_levels=args.alpha,
                samples=args.samples, window=args.window,
            )
            _write_table(rows, VALIDATE_COLUMNS, args.format, args.out, extra=summary)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
