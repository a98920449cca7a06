"""Bounded per-class FIFO queues."""
from __future__ import annotations

from collections import deque


class ClassQueue(deque):
    __slots__ = ("cls", "capacity")

    def __init__(self, cls, capacity: int):
        super().__init__()
        self.cls = cls
        self.capacity = capacity

    @property
    def occupancy(self) -> int:
        return len(self)

    @property
    def available(self) -> int:
        return self.capacity - len(self)

    def offer(self, item) -> bool:
        """Tail-drop enqueue: False when the queue is full."""
        if len(self) >= self.capacity:
            return False
        self.append(item)
        return True
