"""Cost model of the classic tc filter-chain datapath (the NetEm/HTB baseline).

Matching walks an ordered classifier list and stops at the first hit, so
lookup cost grows with the match position; attaching one more link costs
more the more links already exist. The constants are calibrated against
measured behaviour of that stack: 0.1 us per filter checked, 50 us for
the first attach, and a per-existing-link slope that lands the millionth
attach near 47 ms. Delay emulation itself is semantically identical to
the timestamp path, so experiments compare overhead, not semantics.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from typing import Optional

from .links import LinkParams
from .scheduler import Packet

_CHAIN_DST_BASE = int(ipaddress.IPv4Address("10.128.0.0"))


@dataclass(frozen=True)
class CostModel:
    per_filter_check: int = 100  # ns per filter examined (0.1 us)
    attach_base: int = 50_000  # ns to configure the first link (50 us)
    attach_per_existing: int = 45  # ns extra per already-attached link
    per_map_lookup: int = 50  # ns per keyed-map lookup (the timestamp path)

    def __post_init__(self):
        for name in ("per_filter_check", "attach_base", "attach_per_existing", "per_map_lookup"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    def attach_time(self, existing: int) -> int:
        """Modeled cost of attaching one more link when `existing` already exist."""
        return self.attach_base + self.attach_per_existing * existing


@dataclass(frozen=True)
class Filter:
    index: int  # position in the chain, 0-based
    match_dst: int
    params: LinkParams


@dataclass
class FilterChain:
    """Ordered classifier list; evaluation is strictly in index order."""

    filters: list[Filter] = field(default_factory=list)

    def __post_init__(self):
        for pos, f in enumerate(self.filters):
            if f.index != pos:
                raise ValueError(f"filter index {f.index} at position {pos}; indices must be dense")

    def __len__(self) -> int:
        return len(self.filters)

    def append(self, match_dst: int, params: LinkParams) -> Filter:
        f = Filter(index=len(self.filters), match_dst=match_dst, params=params)
        self.filters.append(f)
        return f

    def match(self, dst: int, model: CostModel) -> tuple[Optional[LinkParams], int]:
        """First filter matching dst, plus the modeled cost of getting there.

        A hit at index k charges (k + 1) checks; a miss charges one check
        per filter in the chain.
        """
        for f in self.filters:
            if f.match_dst == dst:
                return f.params, (f.index + 1) * model.per_filter_check
        return None, len(self.filters) * model.per_filter_check


def build_chain(
    link_count: int,
    model: CostModel,
    params: Optional[LinkParams] = None,
) -> tuple[FilterChain, list[int]]:
    """Build a chain of `link_count` filters and model each attach time.

    per_link_times[k] is the cost of attaching filter k with k links
    already present: attach_base + attach_per_existing * k.
    """
    if link_count < 0:
        raise ValueError(f"link_count must be non-negative, got {link_count}")
    if params is None:
        params = LinkParams(latency=0)
    chain = FilterChain()
    for k in range(link_count):
        chain.append(_CHAIN_DST_BASE + k, params)
    times = [model.attach_time(k) for k in range(link_count)]
    return chain, times


def netem_apply(params: LinkParams, packet: Packet) -> int:
    """Baseline delay semantics: departure at created_at + latency.

    Identical to the timestamp path's latency injection, by construction,
    so accuracy comparisons isolate datapath overhead.
    """
    if params.latency is None:
        raise ValueError("netem_apply needs params.latency")
    return packet.created_at + params.latency
