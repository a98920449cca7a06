"""Sink-side reconstruction of one source's stream and its PSNR."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..codec import CodecConfig, FrameLayout, assemble_frame, psnr
from ..netsim import MetricsLog
from ..traffic import Mode, TrafficClass


@dataclass(frozen=True)
class SinkRecord:
    """First arrival of one packet of the scored source at the sink."""
    frame: int
    packet_id: int
    cls: TrafficClass
    capture_time: float
    emit_time: float
    arrival: float


@dataclass(frozen=True)
class StreamFrame:
    """One captured frame of the scored source, in display order."""
    frame: int
    capture_time: float
    mode: Mode
    layout: FrameLayout
    original: np.ndarray  # (H, W) uint8


@dataclass
class PsnrSeries:
    frames: np.ndarray
    times: np.ndarray
    modes: np.ndarray
    values: np.ndarray

    def mean(self, mode: Mode | None = Mode.RUSH) -> float:
        sel = self.values if mode is None else self.values[self.modes == int(mode)]
        return float(sel.mean()) if len(sel) else math.nan


def sink_records(log: MetricsLog, source: int) -> list[SinkRecord]:
    """The source's delivered first copies, sorted by arrival time."""
    fd = log.first_delivery
    out = [SinkRecord(p.frame, p.pid, p.cls, p.capture_time, p.emit_time, fd[p.uid])
           for p in log.emitted if p.src == source and p.uid in fd]
    out.sort(key=lambda r: (r.arrival, r.frame, r.packet_id))
    return out


def reconstruct_and_score(records, stream: list[StreamFrame], codec: CodecConfig, deadlines,
                          playout: str = "emission") -> PsnrSeries:
    """Decode ``stream`` from the packets in ``records`` and score each frame.

    A packet is late when it arrives more than its class deadline after
    ``playout`` ("emission", matching the PDR on-time rule, or "capture").
    Missing macroblocks are concealed from the previously displayed frame.
    """
    if playout not in ("emission", "capture"):
        raise ValueError(f"playout must be 'emission' or 'capture', got {playout!r}")
    got: dict[int, list[int]] = {}
    for r in records:
        ref = r.emit_time if playout == "emission" else r.capture_time
        if r.arrival - ref <= deadlines[r.cls] + 1e-12:
            got.setdefault(r.frame, []).append(r.packet_id)
    prev = None
    values = []
    for sf in stream:
        shown = assemble_frame(sf.layout, got.get(sf.frame, ()), prev, codec, sf.capture_time)
        values.append(psnr(sf.original, shown))
        prev = shown.luma
    return PsnrSeries(
        np.array([sf.frame for sf in stream], dtype=int),
        np.array([sf.capture_time for sf in stream], dtype=float),
        np.array([int(sf.mode) for sf in stream], dtype=int),
        np.array(values, dtype=float),
    )
