"""Per-link emulation parameters: config parsing, keyed maps, mesh generation.

Rates are stored in bytes per second (config files give bits per second,
e.g. ``rate=100Mbit``); delays are stored in integer nanoseconds. The
grammar, one record per line::

    <src-ipv4> <dst-ipv4> [rate=<number><unit>] [delay=<number><unit>]

Rate units are bit/Kbit/Mbit/Gbit (powers of 1000); delay units are
ns/us/ms/s. ``#`` starts a comment, blank lines are skipped, and each
record needs at least one of rate/delay.
"""

from __future__ import annotations

import ipaddress
import re
import time
from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Optional, Sequence

DEFAULT_MAP_CAPACITY = 131_072

RATE_UNITS = {"bit": 1, "Kbit": 10**3, "Mbit": 10**6, "Gbit": 10**9}  # bits/second
DELAY_UNITS = {"ns": 1, "us": 10**3, "ms": 10**6, "s": 10**9}  # nanoseconds

_VALUE_RE = re.compile(r"(?P<number>\d+(?:\.\d+)?)(?P<unit>[A-Za-z]+)\Z")


class ConfigError(ValueError):
    """Link configuration rejected; one (line number, reason) pair per fault."""

    def __init__(self, faults: Sequence[tuple[int, str]]):
        self.faults = list(faults)
        super().__init__("; ".join(f"line {n}: {reason}" for n, reason in self.faults))


class CapacityError(RuntimeError):
    """An insert would push an EmulationMap past its fixed capacity."""


def parse_ipv4(text: str) -> int:
    """Dotted-quad string to u32."""
    try:
        return int(ipaddress.IPv4Address(text))
    except ipaddress.AddressValueError:
        raise ValueError(f"bad IPv4 address {text!r}") from None


def format_ipv4(addr: int) -> str:
    return str(ipaddress.IPv4Address(addr))


@dataclass(frozen=True)
class LinkParams:
    """Emulation settings for one link; at least one field must be set."""

    rate: Optional[int] = None  # bytes/second, > 0
    latency: Optional[int] = None  # nanoseconds, >= 0

    def __post_init__(self):
        if self.rate is None and self.latency is None:
            raise ValueError("LinkParams needs rate or latency")
        if self.rate is not None and self.rate <= 0:
            raise ValueError(f"rate must be positive, got {self.rate}")
        if self.latency is not None and self.latency < 0:
            raise ValueError(f"latency must be non-negative, got {self.latency}")


@dataclass(frozen=True)
class FlowKey:
    """Map key: destination address, optionally qualified by source.

    A dst-only key and a (src, dst) pair key for the same destination
    are distinct keys and never compare equal.
    """

    dst: int
    src: Optional[int] = None

    @property
    def pair(self) -> bool:
        return self.src is not None


@dataclass(frozen=True)
class LinkSpec:
    """One directed emulated link: src -> dst with its parameters."""

    src: int
    dst: int
    params: LinkParams

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"src equals dst ({format_ipv4(self.src)})")


@dataclass(frozen=True)
class LoadReport:
    entry_count: int  # distinct keys among the loaded specs
    elapsed_ns: int  # wall clock


class EmulationMap:
    """Fixed-capacity FlowKey -> LinkParams store.

    ``key_mode`` fixes how specs and packets are keyed for the map's whole
    lifetime: "dst" keys on destination only, "pair" on (src, dst). The
    mode is per-instance so a pair entry can never shadow a dst entry for
    the same destination within one map.
    """

    def __init__(self, capacity: int = DEFAULT_MAP_CAPACITY, key_mode: str = "dst"):
        if capacity <= 0:
            raise ValueError(f"capacity must be positive, got {capacity}")
        if key_mode not in ("dst", "pair"):
            raise ValueError(f"key_mode must be 'dst' or 'pair', got {key_mode!r}")
        self.capacity = capacity
        self.key_mode = key_mode
        self._entries: dict[FlowKey, LinkParams] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def key_for(self, src: int, dst: int) -> FlowKey:
        if self.key_mode == "pair":
            return FlowKey(dst=dst, src=src)
        return FlowKey(dst=dst)

    def insert(self, key: FlowKey, params: LinkParams) -> None:
        """Upsert; raises CapacityError when a new key would exceed capacity."""
        if key not in self._entries and len(self._entries) >= self.capacity:
            raise CapacityError(f"map full at {self.capacity} entries")
        self._entries[key] = params

    def lookup(self, key: FlowKey) -> Optional[LinkParams]:
        return self._entries.get(key)

    def delete(self, key: FlowKey) -> None:
        del self._entries[key]

    def bulk_load(self, specs: Iterable[LinkSpec]) -> LoadReport:
        """Insert every spec (upsert semantics), timed, all-or-nothing.

        Capacity is checked before the first write, so a load that would
        overflow leaves the map untouched.
        """
        specs = list(specs)
        start = time.perf_counter_ns()
        keys = [self.key_for(s.src, s.dst) for s in specs]
        fresh = {k for k in keys if k not in self._entries}
        if len(self._entries) + len(fresh) > self.capacity:
            raise CapacityError(
                f"{len(fresh)} new entries would exceed capacity {self.capacity}"
            )
        entries = self._entries
        for key, spec in zip(keys, specs):
            entries[key] = spec.params
        elapsed = time.perf_counter_ns() - start
        return LoadReport(entry_count=len(set(keys)), elapsed_ns=elapsed)


class TimestampMap:
    """FlowKey -> last departure timestamp (ns). A key's value never moves backwards."""

    def __init__(self):
        self._entries: dict[FlowKey, int] = {}

    def __len__(self) -> int:
        return len(self._entries)

    def get(self, key: FlowKey) -> Optional[int]:
        return self._entries.get(key)

    def update(self, key: FlowKey, tstamp: int) -> None:
        prev = self._entries.get(key)
        if prev is not None and tstamp < prev:
            raise ValueError(f"timestamp for {key} would move backwards ({tstamp} < {prev})")
        self._entries[key] = tstamp


def parse_rate_token(text: str) -> int:
    """Rate value like "100Mbit" (bits/second) to bytes/second."""
    m = _VALUE_RE.match(text)
    if not m or m.group("unit") not in RATE_UNITS:
        raise ValueError(f"bad rate {text!r} (expected <number> followed by bit/Kbit/Mbit/Gbit)")
    bits = Decimal(m.group("number")) * RATE_UNITS[m.group("unit")]
    rate = int(bits / 8)
    if rate <= 0:
        raise ValueError(f"rate {text!r} is below 1 byte/second")
    return rate


def parse_delay_token(text: str) -> int:
    """Delay value like "5ms" to nanoseconds."""
    m = _VALUE_RE.match(text)
    if not m or m.group("unit") not in DELAY_UNITS:
        raise ValueError(f"bad delay {text!r} (expected <number> followed by ns/us/ms/s)")
    return int(Decimal(m.group("number")) * DELAY_UNITS[m.group("unit")])


def render_rate_token(rate: int) -> str:
    bits = rate * 8
    for unit in ("Gbit", "Mbit", "Kbit"):
        if bits % RATE_UNITS[unit] == 0:
            return f"{bits // RATE_UNITS[unit]}{unit}"
    return f"{bits}bit"


def render_delay_token(latency: int) -> str:
    for unit in ("s", "ms", "us"):
        if latency % DELAY_UNITS[unit] == 0:
            return f"{latency // DELAY_UNITS[unit]}{unit}"
    return f"{latency}ns"


def _parse_line(line: str) -> LinkSpec:
    tokens = line.split()
    if len(tokens) < 2:
        raise ValueError("expected '<src> <dst> [rate=...] [delay=...]'")
    src = parse_ipv4(tokens[0])
    dst = parse_ipv4(tokens[1])
    rate: Optional[int] = None
    latency: Optional[int] = None
    for token in tokens[2:]:
        name, sep, value = token.partition("=")
        if not sep:
            raise ValueError(f"expected key=value, got {token!r}")
        if name == "rate":
            if rate is not None:
                raise ValueError("duplicate rate")
            rate = parse_rate_token(value)
        elif name == "delay":
            if latency is not None:
                raise ValueError("duplicate delay")
            latency = parse_delay_token(value)
        else:
            raise ValueError(f"unknown option {name!r}")
    if rate is None and latency is None:
        raise ValueError("line needs rate= or delay=")
    return LinkSpec(src=src, dst=dst, params=LinkParams(rate=rate, latency=latency))


def parse_link_config(text: str) -> list[LinkSpec]:
    """Parse a link configuration document into LinkSpecs, in input order.

    All lines are validated before anything is returned; every faulty
    line is reported (with its number) in the raised ConfigError, and no
    partial result escapes.
    """
    specs: list[LinkSpec] = []
    faults: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            specs.append(_parse_line(line))
        except ValueError as exc:
            faults.append((lineno, str(exc)))
    if faults:
        raise ConfigError(faults)
    return specs


def render_link_config(specs: Iterable[LinkSpec]) -> str:
    """Format specs back into the config grammar; inverse of parse_link_config."""
    lines = []
    for spec in specs:
        parts = [format_ipv4(spec.src), format_ipv4(spec.dst)]
        if spec.params.rate is not None:
            parts.append(f"rate={render_rate_token(spec.params.rate)}")
        if spec.params.latency is not None:
            parts.append(f"delay={render_delay_token(spec.params.latency)}")
        lines.append(" ".join(parts))
    return "\n".join(lines) + ("\n" if lines else "")


def build_full_mesh(addresses: Sequence[int], default_params: LinkParams) -> list[LinkSpec]:
    """One LinkSpec per ordered (src, dst) pair, src != dst: N*(N-1) links.

    Order is deterministic: sources in input order, destinations in input
    order within each source.
    """
    addrs = list(addresses)
    if len(addrs) < 2:
        raise ValueError(f"mesh needs at least 2 addresses, got {len(addrs)}")
    if len(set(addrs)) != len(addrs):
        raise ValueError("mesh addresses must be distinct")
    return [
        LinkSpec(src=a, dst=b, params=default_params)
        for a in addrs
        for b in addrs
        if a != b
    ]
