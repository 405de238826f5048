import numpy as np
import pytest

from ringdps.correlation import average_correlation, prob_no_transmission
from ringdps.validation import (
    DEFAULT_ACCURACY_LEVELS,
    count_dps_transmissions,
    hourly_stats,
    parse_trace,
    resample,
    resampled_correlation_matrix,
)

DAY = 86400
# fixture dates start at 2004-03-01 00:00:00, a midnight epoch boundary
BASE = 1078099200.0


def intel_line(offset_s, node, temp):
    days, rem = divmod(int(offset_s), DAY)
    hh, rem = divmod(rem, 3600)
    mm, ss = divmod(rem, 60)
    date = np.datetime64("2004-03-01") + np.timedelta64(days, "D")
    return f"{date} {hh:02d}:{mm:02d}:{ss:02d}.0 {int(offset_s)} {node} {temp} 40.0 100.0 2.6"


def write_intel(tmp_path, lines, name="trace.txt"):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def synthetic_trace(tmp_path, nodes=(1, 2, 3), days=2, step=60, rho=0.0, seed=0, std=1.0, block=300):
    """Intel-format trace with one reading per node per ``step`` seconds.

    Values are drawn per ``block`` of seconds (cross-node correlation
    ``rho`` within a block, independent across blocks) and repeated for
    every reading inside the block, mimicking slowly varying signals:
    white-in-time data would lose its cross-node correlation once nodes
    are resampled at independent instants.
    """
    rng = np.random.default_rng(seed)
    n = len(nodes)
    sigma = np.full((n, n), rho)
    np.fill_diagonal(sigma, 1.0)
    vals, vecs = np.linalg.eigh(sigma)
    root = (vecs * np.sqrt(np.clip(vals, 0, None))) @ vecs.T
    n_blocks = int(np.ceil(days * DAY / block))
    z = rng.standard_normal((n_blocks, n)) @ root * std + 20.0
    lines = []
    for t in range(0, days * DAY, step):
        b = t // block
        for j, node in enumerate(nodes):
            lines.append(intel_line(t, node, f"{z[b, j]:.6f}"))
    return write_intel(tmp_path, lines)


class TestParseTrace:
    def test_well_formed_lines(self, tmp_path):
        path = write_intel(tmp_path, [intel_line(0, 1, 19.5), intel_line(30, 1, 19.6), intel_line(0, 2, 18.0)])
        trace = parse_trace(path)
        assert len(trace) == 3
        assert trace.node_ids == [1, 2]
        assert trace.skipped_lines == 0
        assert trace.values[1][0] == pytest.approx(19.5)

    def test_malformed_line_skipped_and_counted(self, tmp_path):
        path = write_intel(tmp_path, [intel_line(0, 1, 19.5), "2004-03-01 00:00:30.0 30 1", intel_line(60, 1, 19.7)])
        trace = parse_trace(path)
        assert len(trace) == 2
        assert trace.skipped_lines == 1

    def test_mostly_malformed_is_an_error(self, tmp_path):
        path = write_intel(tmp_path, ["garbage"] * 3 + [intel_line(0, 1, 19.5)])
        with pytest.raises(ValueError, match="malformed"):
            parse_trace(path)

    def test_node_filter(self, tmp_path):
        path = write_intel(tmp_path, [intel_line(0, 1, 19.5), intel_line(0, 2, 18.0), intel_line(0, 3, 17.0)])
        trace = parse_trace(path, nodes=[2, 3])
        assert trace.node_ids == [2, 3]

    def test_field_selection(self, tmp_path):
        path = write_intel(tmp_path, [intel_line(0, 1, 19.5)])
        assert parse_trace(path, field="humidity").values[1][0] == pytest.approx(40.0)
        with pytest.raises(ValueError):
            parse_trace(path, field="pressure")

    def test_generic_csv(self, tmp_path):
        path = tmp_path / "t.csv"
        path.write_text("timestamp,node,value\n0,1,19.5\n300,1,19.6\nbad,row,here\n")
        trace = parse_trace(path)
        assert len(trace) == 2
        assert trace.skipped_lines == 1

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.txt"
        path.write_text("")
        with pytest.raises(ValueError):
            parse_trace(path)

    def test_timestamps_sorted_per_node(self, tmp_path):
        path = write_intel(tmp_path, [intel_line(60, 1, 2.0), intel_line(0, 1, 1.0)])
        trace = parse_trace(path)
        assert list(trace.times[1]) == sorted(trace.times[1])


class TestResample:
    def test_grid_size_eight_days(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2), days=9, step=300)
        series = resample(parse_trace(path), window=300, days=8, seed=0)
        assert series.windows == 2304
        assert series.values.shape == (2, 2304)

    def test_single_reading_window_is_deterministic(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1,), days=1, step=300)
        trace = parse_trace(path)
        a = resample(trace, window=300, days=1, seed=1)
        b = resample(trace, window=300, days=1, seed=99)
        assert np.array_equal(a.values, b.values, equal_nan=True)

    def test_choice_comes_from_the_window(self, tmp_path):
        # white-in-time values so in-window readings differ
        path = synthetic_trace(tmp_path, nodes=(1,), days=1, step=60, block=60)
        trace = parse_trace(path)
        for seed in (1, 2):
            series = resample(trace, window=300, days=1, seed=seed)
            t, v = trace.times[1], trace.values[1]
            for w in range(series.windows):
                lo, hi = series.start + w * 300, series.start + (w + 1) * 300
                in_window = v[(t >= lo) & (t < hi)]
                assert series.values[0, w] in in_window

    def test_empty_window_borrows_within_hour(self, tmp_path):
        # readings only in the first five minutes of each hour
        lines = [intel_line(h * 3600 + 60, 1, 20.0 + h) for h in range(24)]
        path = write_intel(tmp_path, lines)
        series = resample(parse_trace(path), window=300, days=1, seed=0, start=BASE)
        hours = series.values[0].reshape(24, 12)
        assert not np.any(np.isnan(hours))
        assert np.allclose(hours, hours[:, :1])

    def test_silent_hour_stays_missing(self, tmp_path):
        lines = [intel_line(60, 1, 20.0)]
        path = write_intel(tmp_path, lines)
        series = resample(parse_trace(path), window=300, days=1, seed=0, start=BASE)
        assert np.isnan(series.values[0, 12:]).all()
        assert not np.isnan(series.values[0, 0])

    def test_deterministic_given_seed(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2), days=2, step=45)
        trace = parse_trace(path)
        a = resample(trace, days=1, seed=5)
        b = resample(trace, days=1, seed=5)
        assert np.array_equal(a.values, b.values, equal_nan=True)


class TestHourlyStats:
    def _series(self, window_values):
        from ringdps.validation import ResampledSeries

        values = np.full((1, 12), np.nan)
        values[0, : len(window_values)] = window_values
        return ResampledSeries(values=values, node_ids=(1,), window=300.0, start=0.0, days=1)

    def test_known_values(self):
        stats = hourly_stats(self._series([1.0, 2.0, 3.0]))
        assert stats.mean[0, 0] == pytest.approx(2.0)
        assert stats.std[0, 0] == pytest.approx(1.0, rel=1e-12)

    def test_constant_hour_has_zero_std(self, tmp_path):
        lines = [intel_line(w * 300, 1, 7.25) for w in range(12)]
        path = write_intel(tmp_path, lines)
        stats = hourly_stats(resample(parse_trace(path), window=300, days=1, seed=0, start=BASE))
        assert stats.std[0, 0] == 0.0
        assert stats.valid[0, 0]

    def test_sparse_hour_is_excluded(self, tmp_path):
        path = write_intel(tmp_path, [intel_line(60, 1, 20.0)])
        stats = hourly_stats(resample(parse_trace(path), window=300, days=1, seed=0, start=0.0))
        assert not stats.valid[0, 0]
        assert np.isnan(stats.std[0, 0])


class TestCountTransmissions:
    def test_baselines_are_grid_defined(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2, 3, 4, 5, 6, 7, 8, 9), days=9, step=300, seed=3)
        series = resample(parse_trace(path), days=8, seed=0)
        counts = count_dps_transmissions(series, hourly_stats(series), (0.5, 0.9))
        assert counts.baseline_no_dps == 20736
        assert counts.baseline_aggregation == 2304

    def test_monotone_in_accuracy(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2, 3), days=3, step=120, seed=4)
        series = resample(parse_trace(path), days=2, seed=0)
        counts = count_dps_transmissions(series, hourly_stats(series), DEFAULT_ACCURACY_LEVELS)
        tx = [r.transmissions for r in counts.rows]
        assert tx == sorted(tx, reverse=True)

    def test_zero_accuracy_transmits_every_usable_window(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2), days=2, step=60, seed=5)
        series = resample(parse_trace(path), days=1, seed=0)
        counts = count_dps_transmissions(series, hourly_stats(series), (0.0,))
        assert counts.rows[0].transmissions == counts.rows[0].usable_windows

    def test_counts_bounded_by_windows(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2), days=2, step=90, seed=6)
        series = resample(parse_trace(path), days=1, seed=0)
        counts = count_dps_transmissions(series, hourly_stats(series), DEFAULT_ACCURACY_LEVELS)
        for row in counts.rows:
            assert 0 <= row.transmissions <= series.windows

    def test_rejects_bad_accuracy(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2), days=1, step=300, seed=7)
        series = resample(parse_trace(path), days=1, seed=0)
        with pytest.raises(ValueError):
            count_dps_transmissions(series, hourly_stats(series), (1.0,))


class TestCorrelationPipeline:
    def test_recovers_generating_correlation(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1, 2, 3, 4), days=3, step=120, rho=0.8, seed=8)
        series = resample(parse_trace(path), days=2, seed=0)
        m = resampled_correlation_matrix(series)
        avg = average_correlation(m)
        assert avg == pytest.approx(0.8, abs=0.05)

    def test_needs_two_nodes(self, tmp_path):
        path = synthetic_trace(tmp_path, nodes=(1,), days=1, step=300, seed=9)
        series = resample(parse_trace(path), days=1, seed=0)
        with pytest.raises(ValueError):
            resampled_correlation_matrix(series)


class TestSelfConsistency:
    def test_pipeline_matches_mvn_model_on_gaussian_data(self, tmp_path):
        """End-to-end oracle: on truly Gaussian equicorrelated data the counted
        transmission fraction must track 1 - P(no transmission) at the measured
        average correlation. Hourly statistics are estimated from 12 samples, so
        thresholds are noisy; tolerance covers that estimation error."""
        rho = 0.8
        nodes = tuple(range(1, 10))
        path = synthetic_trace(tmp_path, nodes=nodes, days=9, step=150, rho=rho, seed=10)
        series = resample(parse_trace(path), days=8, seed=1)
        stats = hourly_stats(series)
        counts = count_dps_transmissions(series, stats, (0.5, 0.9))
        corr = average_correlation(resampled_correlation_matrix(series))
        assert corr == pytest.approx(rho, abs=0.04)
        for row in counts.rows:
            est = prob_no_transmission(len(nodes), row.accuracy, corr, samples=200_000, seed=2)
            model_pct = 100.0 * (1.0 - est.p)
            assert row.pct_of_aggregation == pytest.approx(model_pct, abs=5.0)
