"""Traffic classes and source modes shared by the codec, routing and engine."""
from __future__ import annotations

import enum


class TrafficClass(enum.IntEnum):
    # lower value is served first by the per-node strict-priority queues
    ROI = 0
    BKGD = 1

    @classmethod
    def parse(cls, s: str) -> "TrafficClass":
        return cls[s.strip().upper()]


class Mode(enum.IntEnum):
    STANDBY = 0
    RUSH = 1

    @classmethod
    def parse(cls, s: str) -> "Mode":
        return cls[s.strip().upper()]
