"""Virtual-time experiments comparing the keyed-map and filter-chain datapaths.

All latency and throughput runs advance a virtual clock and are exactly
reproducible for a given seed; wall-clock time is read only by the map
bulk-load and lookup microbenchmarks, where elapsed time is itself the
measurement. Results come back as SampleSeries and can be written as
long-format CSV.
"""

from __future__ import annotations

import csv
import gc
import random
import statistics
import time
from dataclasses import dataclass, field, replace
from typing import Iterable, Optional, Sequence, TextIO

from .links import (
    DEFAULT_MAP_CAPACITY,
    EmulationMap,
    FlowKey,
    LinkParams,
    LinkSpec,
    TimestampMap,
    build_full_mesh,
    parse_ipv4,
)
from .netem import CostModel, FilterChain, build_chain, netem_apply
from .scheduler import Packet, TimingWheel, pacing_gap_ns, set_departure, throttle

DATAPATH_EDT = "edt-map"
DATAPATH_CHAIN = "filter-chain"
DATAPATHS = (DATAPATH_EDT, DATAPATH_CHAIN)

PROBES = ("latency-probe", "throughput-flow", "config-bench", "bulk-load-bench")

DEFAULT_PACKET_LENGTH = 1500  # bytes
DEFAULT_BASELINE_RTT_NS = 300_000  # 0.3 ms, the unemulated round trip
DEFAULT_LINE_RATE = 575_000_000  # bytes/s, = 4.6 Gbit/s unshaped line rate
DEFAULT_SEED = 42
PROBE_INTERVAL_NS = 10**9  # one probe per virtual second

# Synthetic address pools; kept in disjoint ranges so an unmatched probe
# can never collide with generated entries.
ENTRY_BASE = parse_ipv4("10.0.0.1")
MESH_BASE = parse_ipv4("10.64.0.1")
PROBE_SRC = parse_ipv4("192.168.0.1")
PROBE_DST = parse_ipv4("192.168.0.2")


class VirtualClock:
    """Simulation time in ns; only advances, never reads the host clock."""

    def __init__(self, start: int = 0):
        self.now = start

    def advance_to(self, t: int) -> None:
        if t < self.now:
            raise ValueError(f"clock cannot move backwards ({t} < {self.now})")
        self.now = t

    def advance(self, dt: int) -> None:
        if dt < 0:
            raise ValueError(f"negative advance {dt}")
        self.now += dt


@dataclass
class ExperimentConfig:
    """Parameters for one experiment run; see module docstring for defaults."""

    datapath: str
    probe: str
    param_count: int = 0  # map entries or chain filters
    match_index: Optional[int] = None  # probe flow's position; None = no match
    emulated: Optional[LinkParams] = None
    duration_ns: int = 60 * PROBE_INTERVAL_NS
    packet_length: int = DEFAULT_PACKET_LENGTH
    baseline_rtt_ns: int = DEFAULT_BASELINE_RTT_NS
    line_rate: int = DEFAULT_LINE_RATE  # bytes/s
    seed: int = DEFAULT_SEED
    emulated_directions: int = 1  # how many directions of the round trip are configured
    cost_model: CostModel = field(default_factory=CostModel)

    def __post_init__(self):
        if self.datapath not in DATAPATHS:
            raise ValueError(f"unknown datapath {self.datapath!r}")
        if self.probe not in PROBES:
            raise ValueError(f"unknown probe {self.probe!r}")
        if self.param_count < 0:
            raise ValueError("param_count must be non-negative")
        if self.match_index is not None and not 0 <= self.match_index < self.param_count:
            raise ValueError(
                f"match_index {self.match_index} out of range for {self.param_count} entries"
            )
        if self.emulated is not None and self.match_index is None:
            raise ValueError("emulated params take effect only with a match_index")
        if self.packet_length <= 0 or self.line_rate <= 0 or self.baseline_rtt_ns < 0:
            raise ValueError("packet_length/line_rate/baseline_rtt out of range")
        if self.emulated_directions not in (1, 2):
            raise ValueError("emulated_directions must be 1 or 2")
        if self.duration_ns < PROBE_INTERVAL_NS:
            raise ValueError("duration must cover at least one virtual second")
        if (
            self.emulated is not None
            and self.emulated.rate is not None
            and pacing_gap_ns(self.packet_length, self.emulated.rate) == 0
        ):
            raise ValueError("rate too high to pace at nanosecond resolution")


def percentile(samples: Sequence, q: float):
    """Nearest-rank percentile; deterministic, no interpolation."""
    if not samples:
        raise ValueError("no samples")
    ordered = sorted(samples)
    rank = max(1, -(-len(ordered) * q // 1))  # ceil(n*q), at least 1
    return ordered[min(len(ordered), int(rank)) - 1]


@dataclass
class SeriesPoint:
    """Samples for one independent-variable value."""

    param_count: int
    match_index: Optional[int]
    samples: list

    @property
    def mean(self) -> float:
        return statistics.fmean(self.samples)

    @property
    def p50(self):
        return percentile(self.samples, 0.50)

    @property
    def p95(self):
        return percentile(self.samples, 0.95)


@dataclass
class SampleSeries:
    experiment: str
    datapath: str
    metric: str  # rtt_ns | throughput_Bps | config_time_ns | load_time_ns
    unit: str
    seed: int
    points: list[SeriesPoint]


def steady_state_mean(point: SeriesPoint, seconds: int = 10) -> float:
    """Mean over the final `seconds` per-second samples."""
    return statistics.fmean(point.samples[-seconds:])


def linear_fit(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float, float]:
    """Least-squares slope, intercept, and R^2."""
    slope, intercept = statistics.linear_regression(xs, ys)
    r2 = statistics.correlation(xs, ys) ** 2
    return slope, intercept, r2


def _entry_params(cfg: ExperimentConfig, index: int) -> LinkParams:
    if index == cfg.match_index and cfg.emulated is not None:
        return cfg.emulated
    return LinkParams(latency=0)


def _edt_map(cfg: ExperimentConfig) -> EmulationMap:
    """Map with param_count entries; the probe flow matches iff match_index is set."""
    capacity = max(DEFAULT_MAP_CAPACITY, cfg.param_count)
    emu = EmulationMap(capacity=capacity, key_mode="dst")
    for i in range(cfg.param_count):
        dst = PROBE_DST if i == cfg.match_index else ENTRY_BASE + i
        emu.insert(FlowKey(dst=dst), _entry_params(cfg, i))
    return emu


def _chain(cfg: ExperimentConfig) -> FilterChain:
    """Chain with param_count filters; the probe dst matches at match_index if set."""
    chain = FilterChain()
    for i in range(cfg.param_count):
        dst = PROBE_DST if i == cfg.match_index else ENTRY_BASE + i
        chain.append(dst, _entry_params(cfg, i))
    return chain


def _require_probe(cfg: ExperimentConfig, probe: str) -> None:
    if cfg.probe != probe:
        raise ValueError(f"config probe is {cfg.probe!r}, expected {probe!r}")


def run_latency_probe(cfg: ExperimentConfig) -> SampleSeries:
    """One RTT probe per virtual second.

    Each sample is baseline RTT + one datapath traversal cost + the
    emulated one-way latency per configured direction, plus seeded
    measurement noise (within +/-2% of the baseline).
    """
    _require_probe(cfg, "latency-probe")
    reps = cfg.duration_ns // PROBE_INTERVAL_NS
    rng = random.Random(cfg.seed)
    amp = cfg.baseline_rtt_ns // 50
    clock = VirtualClock()
    emu = tstamps = chain = None
    if cfg.datapath == DATAPATH_EDT:
        emu = _edt_map(cfg)
        tstamps = TimestampMap()
    else:
        chain = _chain(cfg)
    samples = []
    for rep in range(reps):
        clock.advance_to(rep * PROBE_INTERVAL_NS)
        packet = Packet(
            id=rep, src=PROBE_SRC, dst=PROBE_DST,
            length=cfg.packet_length, created_at=clock.now,
        )
        if cfg.datapath == DATAPATH_EDT:
            set_departure(packet, emu, tstamps, clock.now)
            cost = cfg.cost_model.per_map_lookup
            one_way = packet.departure_ts - packet.created_at
        else:
            params, cost = chain.match(packet.dst, cfg.cost_model)
            if params is not None and params.latency is not None:
                one_way = netem_apply(params, packet) - packet.created_at
            else:
                one_way = 0
        noise = rng.randint(-amp, amp) if amp else 0
        samples.append(cfg.baseline_rtt_ns + cost + cfg.emulated_directions * one_way + noise)
    point = SeriesPoint(param_count=cfg.param_count, match_index=cfg.match_index, samples=samples)
    return SampleSeries("latency", cfg.datapath, "rtt_ns", "ns", cfg.seed, [point])


def latency_series(cfg: ExperimentConfig, counts: Sequence[int]) -> SampleSeries:
    """run_latency_probe at each count, merged into one multi-point series."""
    points = []
    for count in counts:
        sub = replace(cfg, param_count=count)
        points.extend(run_latency_probe(sub).points)
    return SampleSeries("latency", cfg.datapath, "rtt_ns", "ns", cfg.seed, points)


def _window_byte_counts(spacing: int, offset: int, seconds: int, length: int) -> list[int]:
    # Releases at offset + k*spacing, k >= 0; count bytes per [w, w+1) second.
    samples = []
    for w in range(seconds):
        start = w * PROBE_INTERVAL_NS
        end = start + PROBE_INTERVAL_NS
        first = max(0, -(-(start - offset) // spacing))
        past = max(0, -(-(end - offset) // spacing))
        samples.append((past - first) * length)
    return samples


def _edt_shaped_windows(cfg: ExperimentConfig, seconds: int) -> list[int]:
    # Saturating sender through the real datapath: timestamps from the
    # map entry, release order and timing from the wheel.
    emu = _edt_map(cfg)
    tstamps = TimestampMap()
    wheel = TimingWheel()
    latency = cfg.emulated.latency or 0
    samples = []
    pid = 0
    for w in range(seconds):
        win_start = w * PROBE_INTERVAL_NS
        win_end = win_start + PROBE_INTERVAL_NS
        while True:
            pid += 1
            packet = Packet(
                id=pid, src=PROBE_SRC, dst=PROBE_DST,
                length=cfg.packet_length, created_at=win_start,
            )
            set_departure(packet, emu, tstamps, win_start)
            wheel.enqueue(packet)
            if packet.departure_ts - latency >= win_end:
                break  # the shaper is past this window; resume next window
        released = wheel.advance(win_end - 1)
        samples.append(sum(p.length for p in released))
    return samples


def _chain_shaped_windows(cfg: ExperimentConfig, seconds: int, dp_cost: int) -> list[int]:
    # The baseline's dequeue path is serialized: each packet is classified
    # between shaped departures, so its chain cost lands on the wire time
    # and the next shaping slot is measured from there.
    tstamps = TimestampMap()
    key = FlowKey(dst=PROBE_DST)
    rate = cfg.emulated.rate
    latency = cfg.emulated.latency or 0
    samples = [0] * seconds
    pid = 0
    while True:
        pid += 1
        packet = Packet(
            id=pid, src=PROBE_SRC, dst=PROBE_DST,
            length=cfg.packet_length, created_at=0,
        )
        t_next = throttle(packet, rate, tstamps, key, now=0)
        tstamps.update(key, t_next + dp_cost)
        if t_next >= cfg.duration_ns:
            break
        release = t_next + dp_cost + latency
        w = release // PROBE_INTERVAL_NS
        if w < seconds:
            samples[w] += cfg.packet_length
    return samples


def run_throughput_flow(cfg: ExperimentConfig) -> SampleSeries:
    """Saturating flow; samples are bytes released per virtual second.

    Unshaped runs are limited by per-packet service time (transmission at
    line rate plus one datapath traversal). When the emulated params
    carry a rate, the datapath's own shaping governs.
    """
    _require_probe(cfg, "throughput-flow")
    seconds = cfg.duration_ns // PROBE_INTERVAL_NS
    tx_time = pacing_gap_ns(cfg.packet_length, cfg.line_rate)
    if cfg.datapath == DATAPATH_EDT:
        dp_cost = cfg.cost_model.per_map_lookup
    else:
        _, dp_cost = _chain(cfg).match(PROBE_DST, cfg.cost_model)
    shaped = cfg.emulated is not None and cfg.emulated.rate is not None
    if not shaped:
        offset = 0
        if cfg.emulated is not None and cfg.emulated.latency is not None:
            offset = cfg.emulated.latency
        samples = _window_byte_counts(tx_time + dp_cost, offset, seconds, cfg.packet_length)
    elif cfg.datapath == DATAPATH_EDT:
        samples = _edt_shaped_windows(cfg, seconds)
    else:
        samples = _chain_shaped_windows(cfg, seconds, dp_cost)
    point = SeriesPoint(param_count=cfg.param_count, match_index=cfg.match_index, samples=samples)
    return SampleSeries("throughput", cfg.datapath, "throughput_Bps", "Bps", cfg.seed, [point])


def throughput_series(cfg: ExperimentConfig, counts: Sequence[int]) -> SampleSeries:
    """run_throughput_flow at each count, merged into one multi-point series."""
    points = []
    for count in counts:
        sub = replace(cfg, param_count=count)
        points.extend(run_throughput_flow(sub).points)
    return SampleSeries("throughput", cfg.datapath, "throughput_Bps", "Bps", cfg.seed, points)


def synthetic_specs(count: int, params: Optional[LinkParams] = None) -> list[LinkSpec]:
    """`count` specs with one shared source and distinct destinations."""
    if params is None:
        params = LinkParams(latency=0)
    return [LinkSpec(src=MESH_BASE, dst=ENTRY_BASE + i, params=params) for i in range(count)]


def measure_bulk_load(
    specs: Sequence[LinkSpec],
    key_mode: str = "dst",
    chunks: int = 100,
    capacity: int = DEFAULT_MAP_CAPACITY,
) -> list[tuple[int, int]]:
    """Wall-clock load of specs into a fresh map, timed in roughly equal chunks.

    Returns (chunk_size, elapsed_ns) pairs. Garbage collection is paused
    during the measurement so per-chunk times reflect insert cost.
    """
    if not specs:
        return []
    emu = EmulationMap(capacity=capacity, key_mode=key_mode)
    chunks = max(1, min(chunks, len(specs)))
    bounds = [len(specs) * i // chunks for i in range(chunks + 1)]
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        out = []
        for i in range(chunks):
            part = specs[bounds[i] : bounds[i + 1]]
            report = emu.bulk_load(part)
            out.append((len(part), report.elapsed_ns))
    finally:
        if was_enabled:
            gc.enable()
    return out


def measure_lookup_time(emu: EmulationMap, keys: Sequence[FlowKey], lookups: int = 10**6) -> int:
    """Wall-clock ns for `lookups` map lookups cycling through `keys`.

    The key sequence is materialized up front so runs against maps of
    different sizes execute the identical loop.
    """
    if not keys:
        raise ValueError("need at least one key")
    repeats = -(-lookups // len(keys))
    seq = (list(keys) * repeats)[:lookups]
    lookup = emu.lookup
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        start = time.perf_counter_ns()
        for key in seq:
            lookup(key)
        return time.perf_counter_ns() - start
    finally:
        if was_enabled:
            gc.enable()


def run_config_benchmark(
    n_processes: int,
    datapath: str,
    model: Optional[CostModel] = None,
    chunks: int = 100,
    seed: int = DEFAULT_SEED,
) -> SampleSeries:
    """Cost of configuring a full mesh of n_processes (N*(N-1) links).

    Filter-chain times are modeled per-link attach costs; keyed-map times
    are measured wall-clock bulk-load chunks (pair keys, since a mesh has
    N*(N-1) distinct source/destination pairs).
    """
    if n_processes < 2:
        raise ValueError(f"need at least 2 processes, got {n_processes}")
    if datapath not in DATAPATHS:
        raise ValueError(f"unknown datapath {datapath!r}")
    model = model if model is not None else CostModel()
    links = n_processes * (n_processes - 1)
    if datapath == DATAPATH_CHAIN:
        _, times = build_chain(links, model)
        point = SeriesPoint(param_count=links, match_index=None, samples=times)
        return SampleSeries("config", datapath, "config_time_ns", "ns", seed, [point])
    addrs = [MESH_BASE + i for i in range(n_processes)]
    specs = build_full_mesh(addrs, LinkParams(latency=0))
    chunk_times = measure_bulk_load(
        specs, key_mode="pair", chunks=chunks, capacity=max(DEFAULT_MAP_CAPACITY, links),
    )
    point = SeriesPoint(param_count=links, match_index=None, samples=[t for _, t in chunk_times])
    return SampleSeries("config", datapath, "load_time_ns", "ns", seed, [point])


def run_bulk_load_benchmark(
    entry_count: int, chunks: int = 100, seed: int = DEFAULT_SEED
) -> SampleSeries:
    """Wall-clock bulk load of entry_count distinct destination entries."""
    chunk_times = measure_bulk_load(synthetic_specs(entry_count), chunks=chunks)
    point = SeriesPoint(param_count=entry_count, match_index=None, samples=[t for _, t in chunk_times])
    return SampleSeries("config", DATAPATH_EDT, "load_time_ns", "ns", seed, [point])


def run_accuracy_experiment(cfg: ExperimentConfig) -> tuple[SampleSeries, SampleSeries]:
    """Both datapaths, identical emulated params and seed, one matching entry each.

    Delay-only params compare probe RTTs; params with a rate compare
    shaped throughput.
    """
    if cfg.emulated is None:
        raise ValueError("accuracy experiment needs emulated params")
    rate_mode = cfg.emulated.rate is not None
    probe = "throughput-flow" if rate_mode else "latency-probe"
    out = []
    for datapath in DATAPATHS:
        sub = replace(cfg, datapath=datapath, probe=probe, param_count=1, match_index=0)
        series = run_throughput_flow(sub) if rate_mode else run_latency_probe(sub)
        series.experiment = "accuracy"
        out.append(series)
    return out[0], out[1]


CSV_HEADER = ("experiment", "datapath", "param_count", "match_index", "rep", "metric", "value", "unit")


def write_csv(series_list: Iterable[SampleSeries], out: TextIO, seed: int) -> None:
    """Long-format CSV, one row per sample, preceded by a `# seed=` comment."""
    out.write(f"# seed={seed}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for series in series_list:
        for point in series.points:
            match_index = "" if point.match_index is None else point.match_index
            for rep, value in enumerate(point.samples):
                writer.writerow([
                    series.experiment, series.datapath, point.param_count,
                    match_index, rep, series.metric, value, series.unit,
                ])
