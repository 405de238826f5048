"""Transmission and energy savings from dual prediction schemes and
in-network aggregation in ring-structured wireless sensor networks."""

from .correlation import (
    CorrelationSpec,
    MvnEstimate,
    aggregated_rx,
    aggregated_traffic_bound,
    aggregated_tx,
    average_correlation,
    bottleneck_slot_rates,
    build_equicorrelation_matrix,
    mvn_box_probability,
    prob_no_transmission,
)
from .energy import DEFAULT_ENERGY_PROFILE, EnergyParams, node_energy
from .prediction import (
    DpsConfig,
    accuracy_from_threshold,
    expected_dps_traffic,
    min_required_accuracy,
    threshold_from_accuracy,
)
from .simulator import (
    SCHEMES,
    SimResult,
    SlotTrace,
    TreeInstance,
    build_tree,
    compare_with_model,
    generate_measurements,
    model_expectations,
    run,
)
from .topology import RingTopology, child_ratio, ring_population, subtree_size, total_nodes
from .traffic import (
    DisseminationMode,
    TrafficReport,
    baseline_node_traffic,
    dissemination_cost,
    dissemination_split,
    gw_to_node_traffic,
)
from .validation import (
    HourlyStats,
    MeasurementTrace,
    ResampledSeries,
    count_dps_transmissions,
    hourly_stats,
    parse_trace,
    resample,
    resampled_correlation_matrix,
)

__version__ = "0.1.0"
