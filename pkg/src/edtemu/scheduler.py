"""Departure-timestamp scheduling: per-flow pacing and a timing-wheel release queue.

Each egress packet gets its departure timestamp rewritten from the
emulation map entry for its flow (throttle to the configured rate, then
add the configured latency), and is then held in a timing wheel until
that timestamp is reached. Packets without a map entry pass through
untouched.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass

from .links import EmulationMap, FlowKey, TimestampMap

WHEEL_GRANULARITY_NS = 1_000
WHEEL_SLOT_COUNT = 65_536


@dataclass
class Packet:
    """Simulated egress packet. departure_ts defaults to created_at (pass-through)."""

    id: int
    src: int
    dst: int
    length: int  # bytes
    created_at: int  # ns
    departure_ts: int = -1  # ns; -1 means "not set yet"

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError(f"packet length must be positive, got {self.length}")
        if self.departure_ts < 0:
            self.departure_ts = self.created_at


def pacing_gap_ns(length: int, rate: int) -> int:
    """Inter-packet gap enforcing `rate`: length * 1e9 / rate, floored to ns."""
    return length * 1_000_000_000 // rate


def throttle(
    packet: Packet,
    rate: int,
    tstamps: TimestampMap,
    key: FlowKey,
    now: int,
    clamp_stale: bool = True,
) -> int:
    """Space this flow's departures one pacing gap apart; returns the new timestamp.

    The first packet of a flow departs at `now`. Afterwards the departure
    is t_last + gap, clamped to `now` by default so an idle flow resumes
    at the configured rate instead of bursting to catch up. Passing
    clamp_stale=False keeps the unclamped recurrence for comparison; it
    can yield timestamps in the past after idle periods.
    """
    gap = pacing_gap_ns(packet.length, rate)
    last = tstamps.get(key)
    if last is None:
        t_next = now
    elif clamp_stale:
        t_next = max(now, last + gap)
    else:
        t_next = last + gap
    tstamps.update(key, t_next)
    packet.departure_ts = t_next
    return t_next


def inject_delay(packet: Packet, latency: int) -> int:
    """Push the departure timestamp out by exactly `latency` ns."""
    if latency < 0:
        raise ValueError(f"latency must be non-negative, got {latency}")
    packet.departure_ts += latency
    return packet.departure_ts


def set_departure(
    packet: Packet,
    emu: EmulationMap,
    tstamps: TimestampMap,
    now: int,
    clamp_stale: bool = True,
) -> bool:
    """Rewrite packet.departure_ts from the map entry for its flow.

    Returns True when an entry matched. Without a match the packet is
    left untouched (pass-through). With a match, rate throttling is
    applied first and the latency is added on top of its output.
    """
    key = emu.key_for(packet.src, packet.dst)
    params = emu.lookup(key)
    if params is None:
        return False
    if params.rate is not None:
        throttle(packet, params.rate, tstamps, key, now, clamp_stale)
    if params.latency is not None:
        inject_delay(packet, params.latency)
    return True


class TimingWheel:
    """Circular slot array releasing packets once their departure time is met.

    Packets within the horizon (granularity * slot_count) sit in per-slot
    FIFO queues; later ones wait in an ordered overflow heap and migrate
    into slots as the wheel turns. advance() never releases a packet
    before its departure timestamp and returns each batch sorted by
    (departure_ts, enqueue order).
    """

    def __init__(
        self,
        granularity: int = WHEEL_GRANULARITY_NS,
        slot_count: int = WHEEL_SLOT_COUNT,
        start: int = 0,
    ):
        if granularity <= 0 or slot_count <= 0:
            raise ValueError("granularity and slot_count must be positive")
        self.granularity = granularity
        self.slot_count = slot_count
        self.now = start
        # Slots are numbered on the absolute ts // granularity grid, so a
        # packet's slot never depends on when it was enqueued.
        self._cursor_slot = start // granularity
        self._slots: list[deque] = [deque() for _ in range(slot_count)]
        self._occupied: set[int] = set()
        self._overflow: list = []  # heap of (departure_ts, seq, packet)
        self._seq = 0
        self._pending = 0

    @property
    def horizon(self) -> int:
        return self.granularity * self.slot_count

    @property
    def cursor(self) -> int:
        """Ring index of the slot containing `now`."""
        return self._cursor_slot % self.slot_count

    def __len__(self) -> int:
        return self._pending

    def enqueue(self, packet: Packet) -> None:
        self._seq += 1
        self._pending += 1
        self._place(packet.departure_ts, self._seq, packet)

    def _place(self, ts: int, seq: int, packet: Packet) -> None:
        slot = ts // self.granularity
        if slot < self._cursor_slot:
            slot = self._cursor_slot  # overdue packets go to the current slot
        if slot - self._cursor_slot >= self.slot_count:
            heapq.heappush(self._overflow, (ts, seq, packet))
            return
        idx = slot % self.slot_count
        self._slots[idx].append((ts, seq, packet))
        self._occupied.add(idx)

    def _migrate_overflow(self) -> None:
        # Pull overflow entries whose slot now fits in the horizon.
        limit = (self._cursor_slot + self.slot_count) * self.granularity
        while self._overflow and self._overflow[0][0] < limit:
            ts, seq, packet = heapq.heappop(self._overflow)
            self._place(ts, seq, packet)

    def advance(self, to: int) -> list[Packet]:
        """Move time forward to `to`; returns every packet due by then, in order."""
        if to < self.now:
            raise ValueError(f"cannot advance backwards ({to} < {self.now})")
        released: list = []
        target = to // self.granularity
        steps = target - self._cursor_slot
        if steps:
            if steps >= self.slot_count:
                # Every slot is crossed at least once: drain them all.
                for idx in self._occupied:
                    released.extend(self._slots[idx])
                    self._slots[idx].clear()
                self._occupied.clear()
            else:
                cur = self._cursor_slot % self.slot_count
                for idx in list(self._occupied):
                    if (idx - cur) % self.slot_count < steps:
                        released.extend(self._slots[idx])
                        self._slots[idx].clear()
                        self._occupied.discard(idx)
            self._cursor_slot = target
        self._migrate_overflow()
        # The slot containing `to` may hold packets due within the current
        # quantum; release exactly those.
        idx = target % self.slot_count
        dq = self._slots[idx]
        if dq:
            keep = deque()
            for item in dq:
                if item[0] <= to:
                    released.append(item)
                else:
                    keep.append(item)
            self._slots[idx] = keep
            if not keep:
                self._occupied.discard(idx)
        self.now = to
        released.sort(key=lambda item: (item[0], item[1]))
        self._pending -= len(released)
        return [packet for _, _, packet in released]
