"""Command-line front end: load configs, generate meshes, run benchmarks.

Exit codes: 0 on success, 1 for usage or config-file errors, 2 for
runtime failures (capacity exhausted, unwritable output, bad experiment
parameters).
"""

from __future__ import annotations

import argparse
import ipaddress
import itertools
import sys
from typing import Optional, Sequence

from .experiments import (
    DATAPATH_CHAIN,
    DATAPATH_EDT,
    DATAPATHS,
    DEFAULT_SEED,
    PROBE_INTERVAL_NS,
    ExperimentConfig,
    SampleSeries,
    latency_series,
    run_accuracy_experiment,
    run_bulk_load_benchmark,
    run_config_benchmark,
    run_latency_probe,
    run_throughput_flow,
    write_csv,
)
from .links import (
    DEFAULT_MAP_CAPACITY,
    CapacityError,
    ConfigError,
    EmulationMap,
    LinkParams,
    build_full_mesh,
    parse_delay_token,
    parse_link_config,
    parse_rate_token,
    render_link_config,
)

DEFAULT_SCALING_COUNTS = (1_000, 5_000, 10_000, 20_000, 40_000, 65_000)


class UsageError(ValueError):
    """Bad argument combination detected after parsing."""


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage by default; we reserve 2 for runtime."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _count_list(text: str) -> list[int]:
    counts = [int(part) for part in text.split(",") if part.strip()]
    if not counts or any(c <= 0 for c in counts):
        raise ValueError(f"bad count list {text!r}")
    return counts


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="edtemu", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p_load = sub.add_parser("load", help="parse a link config file and load it into a map")
    p_load.add_argument("path", help="link config file")
    p_load.add_argument("--key-mode", choices=("dst", "pair"), default="dst")
    p_load.add_argument("--capacity", type=int, default=DEFAULT_MAP_CAPACITY)

    p_mesh = sub.add_parser("mesh", help="emit a full-mesh link config")
    p_mesh.add_argument("--n", type=int, required=True, help="number of hosts")
    p_mesh.add_argument("--subnet", default="10.0.0.0/16", help="addresses are drawn from here")
    p_mesh.add_argument("--rate", type=parse_rate_token, help="per-link rate, e.g. 100Mbit")
    p_mesh.add_argument("--delay", type=parse_delay_token, help="per-link delay, e.g. 5ms")
    p_mesh.add_argument("--out", help="output path (default stdout)")

    p_bench = sub.add_parser("bench", help="run an experiment and write CSV")
    p_bench.add_argument(
        "experiment", choices=("latency", "throughput", "config", "accuracy"),
    )
    p_bench.add_argument("--datapath", choices=DATAPATHS)
    p_bench.add_argument(
        "--counts", type=_count_list, default=None,
        help="comma-separated entry counts for a multi-point series",
    )
    p_bench.add_argument("--count", type=int, default=None, help="entry count for a single point")
    p_bench.add_argument("--n", type=int, default=None, help="mesh size for the config bench")
    p_bench.add_argument("--match-index", type=int, default=None)
    p_bench.add_argument("--rate", type=parse_rate_token, default=None)
    p_bench.add_argument("--delay", type=parse_delay_token, default=None)
    p_bench.add_argument("--duration", type=int, default=60, help="virtual seconds per point")
    p_bench.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p_bench.add_argument("--out", help="CSV path (default stdout)")
    return parser


def _cmd_load(args) -> int:
    with open(args.path) as fh:
        specs = parse_link_config(fh.read())
    emu = EmulationMap(capacity=args.capacity, key_mode=args.key_mode)
    report = emu.bulk_load(specs)
    print(f"loaded {report.entry_count} entries in {report.elapsed_ns / 1e6:.1f} ms")
    return 0


def _cmd_mesh(args) -> int:
    if args.n < 2:
        raise UsageError("--n must be at least 2")
    if args.rate is None and args.delay is None:
        raise UsageError("mesh needs --rate or --delay (or both)")
    network = ipaddress.IPv4Network(args.subnet)
    hosts = [int(a) for a in itertools.islice(network.hosts(), args.n)]
    if len(hosts) < args.n:
        raise UsageError(f"subnet {args.subnet} has fewer than {args.n} hosts")
    params = LinkParams(rate=args.rate, latency=args.delay)
    text = render_link_config(build_full_mesh(hosts, params))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _emulated_params(args) -> Optional[LinkParams]:
    if args.rate is None and args.delay is None:
        return None
    return LinkParams(rate=args.rate, latency=args.delay)


def _bench_series(args) -> list[SampleSeries]:
    emulated = _emulated_params(args)
    duration_ns = args.duration * PROBE_INTERVAL_NS

    if args.experiment == "accuracy":
        if emulated is None:
            raise UsageError("accuracy needs --rate or --delay")
        try:
            cfg = ExperimentConfig(
                datapath=DATAPATH_EDT, probe="latency-probe", param_count=1, match_index=0,
                emulated=emulated, duration_ns=duration_ns, seed=args.seed,
            )
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        return list(run_accuracy_experiment(cfg))

    if args.datapath is None:
        raise UsageError(f"{args.experiment} needs --datapath")

    if args.experiment == "config":
        if args.count is not None:
            if args.datapath != DATAPATH_EDT:
                raise UsageError("--count applies to the edt-map bulk load only")
            if args.count <= 0:
                raise UsageError("--count must be positive")
            return [run_bulk_load_benchmark(args.count, seed=args.seed)]
        if args.n is None:
            raise UsageError("config needs --n (mesh size) or --count (entry count)")
        if args.n < 2:
            raise UsageError("--n must be at least 2")
        return [run_config_benchmark(args.n, args.datapath, seed=args.seed)]

    probe = "latency-probe" if args.experiment == "latency" else "throughput-flow"
    if args.counts is not None and args.count is not None:
        raise UsageError("give --counts or --count, not both")
    match_index = args.match_index
    if emulated is not None and match_index is None:
        match_index = 0  # emulated params imply one matching entry up front
    if args.counts is not None:
        counts = args.counts
    elif args.count is not None:
        counts = [args.count]
    elif emulated is not None:
        counts = [1]
    elif args.experiment == "latency":
        counts = list(DEFAULT_SCALING_COUNTS)
    else:
        counts = [0]  # unshaped flow against an empty map or chain

    try:
        cfg = ExperimentConfig(
            datapath=args.datapath, probe=probe, param_count=counts[0],
            match_index=match_index, emulated=emulated,
            duration_ns=duration_ns, seed=args.seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.experiment == "latency":
        if len(counts) == 1:
            return [run_latency_probe(cfg)]
        return [latency_series(cfg, counts)]
    if len(counts) != 1:
        raise UsageError("throughput takes a single --count")
    return [run_throughput_flow(cfg)]


def _cmd_bench(args) -> int:
    series = _bench_series(args)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(series, fh, args.seed)
    else:
        write_csv(series, sys.stdout, args.seed)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {"load": _cmd_load, "mesh": _cmd_mesh, "bench": _cmd_bench}
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        for lineno, reason in exc.faults:
            print(f"line {lineno}: {reason}", file=sys.stderr)
        return 1
    except UsageError as exc:
        print(f"edtemu: error: {exc}", file=sys.stderr)
        return 1
    except CapacityError as exc:
        print(f"edtemu: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"edtemu: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
