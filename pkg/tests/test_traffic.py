import pytest
from hypothesis import given, strategies as st

from ringdps.traffic import (
    DisseminationMode,
    TrafficReport,
    baseline_node_traffic,
    dissemination_cost,
    dissemination_split,
    gw_to_node_traffic,
)

MODES = list(DisseminationMode)


class TestTrafficReport:
    def test_total_is_sum(self):
        rep = TrafficReport(tx=3.5, rx=1.25)
        assert rep.total == 3.5 + 1.25

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            TrafficReport(tx=-1.0, rx=0.0)


class TestBaseline:
    def test_first_ring_d5(self):
        assert baseline_node_traffic(1, 5, 1.0, 1.0).total == pytest.approx(49, rel=1e-12)

    def test_leaf(self):
        rep = baseline_node_traffic(4, 4, 1.0, 1.0)
        assert rep.tx == pytest.approx(1.0)
        assert rep.rx == 0.0

    def test_day_of_minutely_measurements(self):
        rep = baseline_node_traffic(1, 3, 1 / 60, 86400.0)
        assert rep.total == pytest.approx(24480, rel=1e-12)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            baseline_node_traffic(0, 3, 1.0, 1.0)
        with pytest.raises(ValueError):
            baseline_node_traffic(1, 3, 0.0, 1.0)
        with pytest.raises(ValueError):
            baseline_node_traffic(1, 3, 1.0, -5.0)

    def test_first_ring_is_bottleneck(self):
        for D in (2, 3, 5, 8):
            first = baseline_node_traffic(1, D, 1.0, 1.0).total
            for d in range(2, D + 1):
                assert first > baseline_node_traffic(d, D, 1.0, 1.0).total

    @given(st.integers(1, 10), st.floats(1e-4, 10.0), st.floats(1.0, 1e6))
    def test_linear_in_rate_and_period(self, D, f, T):
        base = baseline_node_traffic(1, D, f, T)
        assert baseline_node_traffic(1, D, 2 * f, T).total == pytest.approx(2 * base.total, rel=1e-9)
        assert baseline_node_traffic(1, D, f, 3 * T).total == pytest.approx(3 * base.total, rel=1e-9)


class TestGwToNode:
    def test_first_ring_d5(self):
        rep = gw_to_node_traffic(1, 5)
        assert rep.rx == pytest.approx(25, rel=1e-12)
        assert rep.tx == pytest.approx(24, rel=1e-12)

    def test_leaf(self):
        rep = gw_to_node_traffic(4, 4)
        assert rep.tx == 0.0
        assert rep.rx == pytest.approx(1.0)

    def test_first_ring_d3(self):
        rep = gw_to_node_traffic(1, 3)
        assert rep.rx == pytest.approx(9, rel=1e-12)
        assert rep.tx == pytest.approx(8, rel=1e-12)

    def test_matches_unicast_dissemination(self):
        for D in (1, 2, 3, 5, 10):
            rep = gw_to_node_traffic(1, D)
            assert rep.total == pytest.approx(
                dissemination_cost(DisseminationMode.GW_UNICAST, D), rel=1e-12
            )
            assert rep.total == pytest.approx(2 * D * D - 1, rel=1e-12)


class TestDissemination:
    def test_unicast_d5(self):
        assert dissemination_cost(DisseminationMode.GW_UNICAST, 5) == 49

    def test_broadcast_is_single_packet(self):
        for D in (1, 2, 5, 10):
            assert dissemination_cost(DisseminationMode.GW_BROADCAST, D) == 1

    def test_independent_is_free(self):
        for D in (1, 3, 7):
            assert dissemination_cost(DisseminationMode.INDEPENDENT, D) == 0

    def test_aggregated_unicast(self):
        for D in (2, 3, 5, 10):
            assert dissemination_cost(DisseminationMode.GW_UNICAST_AGGREGATED, D) == 4
        assert dissemination_cost(DisseminationMode.GW_UNICAST_AGGREGATED, 1) == 1

    def test_sensor_chosen_matches_gw_unicast_cost(self):
        for D in (1, 3, 5):
            assert dissemination_cost(DisseminationMode.SENSOR_CHOSEN, D) == dissemination_cost(
                DisseminationMode.GW_UNICAST, D
            )

    @pytest.mark.parametrize("mode", MODES)
    def test_split_sums_to_cost(self, mode):
        for D in (1, 2, 5, 9):
            tx, rx = dissemination_split(mode, D)
            assert tx >= 0 and rx >= 0
            assert tx + rx == pytest.approx(dissemination_cost(mode, D), rel=1e-12)

    def test_split_direction_differs_between_chosen_modes(self):
        tx_gw, rx_gw = dissemination_split(DisseminationMode.GW_UNICAST, 4)
        tx_sn, rx_sn = dissemination_split(DisseminationMode.SENSOR_CHOSEN, 4)
        assert (tx_gw, rx_gw) == (rx_sn, tx_sn)

    def test_invalid_d(self):
        with pytest.raises(ValueError):
            dissemination_cost(DisseminationMode.GW_UNICAST, 0)
