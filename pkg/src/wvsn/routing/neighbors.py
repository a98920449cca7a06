"""Delay beacons, neighbor table and link-quality estimation."""
from __future__ import annotations

import math
from dataclasses import dataclass

SMOOTHING = 0.3
LOSS_PRIOR = 0.05
STALE_PERIODS = 3


@dataclass(slots=True, frozen=True)
class DelayBeacon:
    sender_id: int
    position: tuple[float, float]
    abs_per_class: tuple[int, ...]  # free slots, indexed by TrafficClass
    residual_energy: float
    timestamp: float

    def __post_init__(self):
        vals = (*self.position, self.residual_energy, self.timestamp, *self.abs_per_class)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"non-finite beacon field from node {self.sender_id}")


@dataclass(slots=True)
class NeighborEntry:
    neighbor_id: int
    position: tuple[float, float]
    delay_estimate: float
    loss_estimate: float
    abs_per_class: tuple[int, ...]
    residual_energy: float
    last_beacon_time: float

    def record_ack(self, delay: float, smoothing: float = SMOOTHING) -> None:
        self.delay_estimate += smoothing * (delay - self.delay_estimate)
        self.loss_estimate -= smoothing * self.loss_estimate

    def record_loss(self, smoothing: float = SMOOTHING) -> None:
        self.loss_estimate += smoothing * (1.0 - self.loss_estimate)


class NeighborTable(dict):
    """Neighbor id -> :class:`NeighborEntry`, owned by a single node."""

    def __init__(self, beacon_period: float = 1.0, delay_prior: float = 0.004, loss_prior: float = LOSS_PRIOR):
        super().__init__()
        self.beacon_period = beacon_period
        self.delay_prior = delay_prior
        self.loss_prior = loss_prior
        self._oldest = math.inf  # lower bound on the entries' last_beacon_time

    def __setitem__(self, key, entry):
        super().__setitem__(key, entry)
        if entry.last_beacon_time < self._oldest:
            self._oldest = entry.last_beacon_time

    def evict_stale(self, now: float) -> list[int]:
        horizon = STALE_PERIODS * self.beacon_period
        if not now - self._oldest > horizon:
            return []
        gone = [j for j, e in self.items() if now - e.last_beacon_time > horizon]
        for j in gone:
            del self[j]
        self._oldest = min((e.last_beacon_time for e in self.values()), default=math.inf)
        return gone


def update_neighbor(table: NeighborTable, beacon: DelayBeacon, now: float) -> NeighborTable:
    """Upsert the sender's entry from a beacon and drop stale entries.

    Link estimates (delay, loss) survive beacon refreshes; a new or
    re-appearing neighbor starts from the table's priors.
    """
    e = table.get(beacon.sender_id)
    if e is None:
        table[beacon.sender_id] = NeighborEntry(
            beacon.sender_id, beacon.position, table.delay_prior, table.loss_prior,
            beacon.abs_per_class, beacon.residual_energy, now,
        )
    else:
        e.position = beacon.position
        e.abs_per_class = beacon.abs_per_class
        e.residual_energy = beacon.residual_energy
        e.last_beacon_time = now
    table.evict_stale(now)
    return table


def estimate_link_stats(history, delay_prior: float, loss_prior: float = LOSS_PRIOR,
                        smoothing: float = SMOOTHING) -> tuple[float, float]:
    """Replay send outcomes through the EWMA estimators.

    ``history`` yields ``(acked, delay)`` pairs; ``delay`` is ignored for
    failures. Returns ``(delay_estimate, loss_estimate)``.
    """
    e = NeighborEntry(-1, (0.0, 0.0), delay_prior, loss_prior, (), 0.0, 0.0)
    for acked, delay in history:
        if acked:
            e.record_ack(delay, smoothing)
        else:
            e.record_loss(smoothing)
    return e.delay_estimate, e.loss_estimate
