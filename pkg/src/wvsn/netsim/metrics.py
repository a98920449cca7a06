"""Per-run measurement log and its CSV forms."""
from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..traffic import Mode, TrafficClass


@dataclass(slots=True)
class Packet:
    """One application packet (a frame fragment) as emitted by its source."""
    uid: int
    src: int
    frame: int
    pid: int
    cls: TrafficClass
    mode: Mode
    bits: int
    capture_time: float
    emit_time: float = -1.0


@dataclass
class MetricsLog:
    protocol: str
    realization: int
    node_count: int
    initial_energy: float
    end_time: float = 0.0
    emitted: list = field(default_factory=list)  # Packet, in emission order
    first_delivery: dict = field(default_factory=dict)  # uid -> arrival time at sink
    death_times: np.ndarray | None = None
    residual: np.ndarray | None = None
    consumed: np.ndarray | None = None
    copies_created: int = 0
    relayed: int = 0
    delivered: int = 0
    duplicates: int = 0
    drops: Counter = field(default_factory=Counter)  # (reason, cls) -> count
    unsent: int = 0  # captured but never emitted (source death)
    overflow: Counter = field(default_factory=Counter)  # cls -> captured packets refused by a full source backlog
    transmissions: int = 0
    events: int = 0
    trace: list = field(default_factory=list)  # (time, node, event, class, reason)

    # -- conservation -----------------------------------------------------

    def dropped_total(self) -> int:
        return sum(self.drops.values())

    def copy_balance(self) -> int:
        """created - (delivered + duplicates + relayed + dropped); 0 when conserved."""
        return self.copies_created - (self.delivered + self.duplicates + self.relayed + self.dropped_total())

    def energy_balance(self) -> float:
        return float(self.node_count * self.initial_energy - self.residual.sum() - self.consumed.sum())

    # -- derived metrics --------------------------------------------------

    def alive_series(self, step: float = 1.0, horizon: float | None = None) -> tuple[np.ndarray, np.ndarray]:
        horizon = self.end_time if horizon is None else horizon
        t = np.arange(0.0, horizon + 1e-9, step)
        dt = np.sort(self.death_times)
        alive = self.node_count - np.searchsorted(dt, t, side="right")
        return t, alive

    def time_of_deaths(self, fraction: float) -> float:
        """Time at which ``ceil(fraction * N)`` nodes are dead; inf if never."""
        k = max(1, math.ceil(fraction * self.node_count - 1e-9))
        dt = np.sort(self.death_times)
        return float(dt[k - 1]) if k <= len(dt) else math.inf

    def _select(self, cls: TrafficClass | None, mode: Mode | None):
        return [p for p in self.emitted
                if (cls is None or p.cls == cls) and (mode is None or p.mode == mode)]

    def delays(self, cls: TrafficClass | None = None, mode: Mode | None = None) -> np.ndarray:
        fd = self.first_delivery
        return np.array([fd[p.uid] - p.emit_time for p in self._select(cls, mode) if p.uid in fd])

    def on_time(self, p: Packet, deadlines) -> bool:
        t = self.first_delivery.get(p.uid)
        return t is not None and t - p.emit_time <= deadlines[p.cls] + 1e-12

    def pdr(self, deadlines, cls: TrafficClass | None = None, mode: Mode | None = None) -> float:
        sel = self._select(cls, mode)
        if not sel:
            return math.nan
        return sum(self.on_time(p, deadlines) for p in sel) / len(sel)

    # -- CSV --------------------------------------------------------------

    def summary_rows(self, deadlines) -> list[tuple]:
        rows = [
            ("end_time", "", "", self.end_time),
            ("first_death", "", "", self.time_of_deaths(1 / self.node_count)),
            ("half_death", "", "", self.time_of_deaths(0.5)),
            ("copies_created", "", "", self.copies_created),
            ("relayed", "", "", self.relayed),
            ("delivered", "", "", self.delivered),
            ("duplicates", "", "", self.duplicates),
            ("unsent", "", "", self.unsent),
            ("transmissions", "", "", self.transmissions),
            ("energy_consumed", "", "", float(self.consumed.sum())),
        ]
        for mode in Mode:
            for cls in TrafficClass:
                n = len(self._select(cls, mode))
                if not n:
                    continue
                d = self.delays(cls, mode)
                rows.append(("emitted", mode.name, cls.name, n))
                rows.append(("pdr", mode.name, cls.name, self.pdr(deadlines, cls, mode)))
                rows.append(("mean_delay", mode.name, cls.name, float(d.mean()) if len(d) else math.nan))
        for (reason, cls), n in sorted(self.drops.items()):
            rows.append(("drop", reason, cls.name, n))
        for cls, n in sorted(self.overflow.items()):
            rows.append(("source_overflow", "", cls.name, n))
        return rows

    def to_csv(self, deadlines, verbose: bool = False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if verbose:
            w.writerow(["time", "node", "event", "class", "reason"])
            for row in self.trace:
                w.writerow([f"{row[0]:.9f}", *row[1:]])
        else:
            w.writerow(["protocol", "realization", "metric", "mode", "class", "value"])
            for metric, mode, cls, value in self.summary_rows(deadlines):
                w.writerow([self.protocol, self.realization, metric, mode, cls, repr(float(value))])
        return buf.getvalue()
