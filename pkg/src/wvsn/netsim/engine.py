"""Time-ordered event queue with FIFO tie-break."""
from __future__ import annotations

import enum
import heapq
from typing import NamedTuple


class EventKind(enum.IntEnum):
    BEACON_TX = 0
    FRAME_CAPTURE = 1
    PACKET_EMIT = 2
    TX_END = 3
    MODE_SWITCH = 4
    TIMER = 5


class SimEvent(NamedTuple):
    time: float
    sequence: int
    kind: int
    node: int
    payload: object


class CausalityError(RuntimeError):
    """An event was scheduled before the current simulation time."""


class EventQueue:
    """Min-heap of :class:`SimEvent` ordered by (time, sequence)."""

    __slots__ = ("_heap", "_seq", "now")

    def __init__(self):
        self._heap: list = []
        self._seq = 0
        self.now = 0.0

    def __len__(self):
        return len(self._heap)

    def push(self, time: float, kind: int, node: int = -1, payload=None) -> None:
        if time < self.now:
            raise CausalityError(f"event {EventKind(kind).name} at t={time} scheduled in the past (now={self.now})")
        self._seq += 1
        heapq.heappush(self._heap, SimEvent(time, self._seq, kind, node, payload))

    def pop(self) -> SimEvent:
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev

    def peek_time(self) -> float:
        return self._heap[0].time if self._heap else float("inf")
