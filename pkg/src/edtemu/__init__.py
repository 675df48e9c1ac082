"""Network link emulation via departure timestamps, plus a filter-chain cost model.

Two datapaths are provided. The keyed-map path rewrites each egress
packet's departure timestamp from per-destination parameters (rate
throttling and latency injection) and releases packets through a timing
wheel. The filter-chain path is a calibrated cost model of the
traditional tc/NetEm approach (sequential classifier matching, linearly
growing attach cost) used as the comparison baseline. A deterministic
virtual-time harness runs latency, throughput, configuration, and
accuracy experiments over both and emits CSV.
"""

from .experiments import (
    DATAPATH_CHAIN,
    DATAPATH_EDT,
    ExperimentConfig,
    SampleSeries,
    SeriesPoint,
    VirtualClock,
    latency_series,
    linear_fit,
    measure_bulk_load,
    measure_lookup_time,
    percentile,
    run_accuracy_experiment,
    run_bulk_load_benchmark,
    run_config_benchmark,
    run_latency_probe,
    run_throughput_flow,
    steady_state_mean,
    synthetic_specs,
    throughput_series,
    write_csv,
)
from .links import (
    CapacityError,
    ConfigError,
    EmulationMap,
    FlowKey,
    LinkParams,
    LinkSpec,
    LoadReport,
    TimestampMap,
    build_full_mesh,
    format_ipv4,
    parse_ipv4,
    parse_link_config,
    render_link_config,
)
from .netem import CostModel, Filter, FilterChain, build_chain, netem_apply
from .scheduler import Packet, TimingWheel, inject_delay, pacing_gap_ns, set_departure, throttle

__all__ = [
    "CapacityError",
    "ConfigError",
    "CostModel",
    "DATAPATH_CHAIN",
    "DATAPATH_EDT",
    "EmulationMap",
    "ExperimentConfig",
    "Filter",
    "FilterChain",
    "FlowKey",
    "LinkParams",
    "LinkSpec",
    "LoadReport",
    "Packet",
    "SampleSeries",
    "SeriesPoint",
    "TimestampMap",
    "TimingWheel",
    "VirtualClock",
    "build_chain",
    "build_full_mesh",
    "format_ipv4",
    "inject_delay",
    "latency_series",
    "linear_fit",
    "measure_bulk_load",
    "measure_lookup_time",
    "netem_apply",
    "pacing_gap_ns",
    "parse_ipv4",
    "parse_link_config",
    "percentile",
    "render_link_config",
    "run_accuracy_experiment",
    "run_bulk_load_benchmark",
    "run_config_benchmark",
    "run_latency_probe",
    "run_throughput_flow",
    "set_departure",
    "steady_state_mean",
    "synthetic_specs",
    "throttle",
    "throughput_series",
    "write_csv",
]
