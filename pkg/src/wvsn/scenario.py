"""Experiment configuration, seeded deployment and the application timeline.

Scenario files are flat ``key = value`` text, one setting per line, ``#``
starting a comment. Values are numbers (optionally with a unit suffix such
as ``mA``, ``kbps``, ``s``), booleans or names. Class and per-protocol
settings use dotted keys (``roi.dr``, ``eqbsa.beta``). See README for the
full key list.
"""
from __future__ import annotations

import dataclasses
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .codec import CodecConfig
from .routing import ProtocolParams, Variant
from .traffic import Mode, TrafficClass


class ConfigError(ValueError):
    """Malformed or invalid scenario file."""


@dataclass(frozen=True)
class ClassSpec:
    cls: TrafficClass
    dr: float
    deadline: float
    pr_standby: float
    pr_rush: float

    def rate(self, mode: Mode) -> float:
        return self.pr_rush if mode == Mode.RUSH else self.pr_standby


DEFAULT_CLASSES = (
    ClassSpec(TrafficClass.ROI, 0.7, 1.0, 5.0, 10.0),
    ClassSpec(TrafficClass.BKGD, 0.3, 2.0, 5.0, 10.0),
)
DEFAULT_WEIGHTS = {Variant.MMSPEED: (1.0, 0.0), Variant.QBSA: (0.7, 0.0), Variant.EQBSA: (0.3, 0.2)}


@dataclass(frozen=True)
class ScenarioConfig:
    node_count: int = 100
    video_node_fraction: float = 0.5
    terrain_width: float = 200.0
    terrain_height: float = 200.0
    sink_x: float = 100.0
    sink_y: float = 0.0
    radio_range: float = 40.0
    bandwidth: float = 250e3
    loss_at_range: float = 0.3
    queue_capacity_per_class: int = 100
    initial_energy: float = 10.0
    tx_current: float = 28.18e-3
    rx_current: float = 39.5e-3
    supply_voltage: float = 3.0
    warmup_duration: float = 50.0
    beacon_period: float = 1.0
    beacon_bits: int = 256
    realization_count: int = 10
    rng_seed: int = 1
    event_time: float = 60.0
    rush_duration: float = 40.0
    rush_source_count: int = 1
    max_time_factor: float = 10.0
    protocol: Variant = Variant.EQBSA
    alpha: float = 0.3
    beta: float = 0.2
    weights: dict = field(default_factory=lambda: dict(DEFAULT_WEIGHTS))
    classes: tuple[ClassSpec, ClassSpec] = DEFAULT_CLASSES
    codec: CodecConfig = field(default_factory=CodecConfig)

    def __post_init__(self):
        # alpha/beta are the weights of the selected protocol
        object.__setattr__(self, "weights", {**self.weights, self.protocol: (self.alpha, self.beta)})
        self.validate()

    def validate(self) -> None:
        def need(ok, msg):
            if not ok:
                raise ConfigError(msg)

        need(self.node_count > 0, "node_count must be positive")
        need(0 < self.video_node_fraction <= 1, "video_node_fraction must be in (0, 1]")
        need(self.terrain_width > 0 and self.terrain_height > 0, "terrain dimensions must be positive")
        need(0 <= self.sink_x <= self.terrain_width and 0 <= self.sink_y <= self.terrain_height,
             "sink must lie inside the terrain")
        need(self.radio_range > 0, "radio_range must be positive")
        need(self.bandwidth > 0, "bandwidth must be positive")
        need(0 <= self.loss_at_range <= 1, "loss_at_range must be in [0, 1]")
        need(self.queue_capacity_per_class > 0, "queue capacity must be positive")
        need(self.initial_energy > 0, "initial_energy must be positive")
        need(min(self.tx_current, self.rx_current, self.supply_voltage) >= 0, "currents and voltage must be >= 0")
        need(self.beacon_period > 0, "beacon_period must be positive")
        need(self.realization_count > 0, "realization_count must be positive")
        need(self.warmup_duration >= 0, "warmup_duration must be >= 0")
        need(self.event_time >= self.warmup_duration, "event_time must not precede the warm-up end (XD)")
        need(self.rush_duration >= 0, "rush_duration must be >= 0")
        need(0 <= self.rush_source_count <= self.video_node_count, "rush_source_count exceeds video nodes")
        need(self.max_time_factor >= 1, "max_time_factor must be >= 1")
        for v, (a, b) in self.weights.items():
            need(a >= 0 and b >= 0, f"{v.value}: weights must be nonnegative")
            need(a + b <= 1 + 1e-12, f"{v.value}: alpha + beta = {a + b:g} > 1 leaves a negative energy weight")
        for c in self.classes:
            need(0 <= c.dr <= 1, f"{c.cls.name}: desired reliability must be in [0, 1]")
            need(c.deadline > 0, f"{c.cls.name}: deadline must be positive")
            need(c.pr_standby > 0 and c.pr_rush > 0, f"{c.cls.name}: packet rates must be positive")

    @property
    def video_node_count(self) -> int:
        return int(math.floor(self.video_node_fraction * self.node_count + 0.5))

    @property
    def video_end(self) -> float:
        return self.event_time + self.rush_duration

    @property
    def sink_position(self) -> tuple[float, float]:
        return (self.sink_x, self.sink_y)

    def protocol_params(self, variant: Variant | None = None) -> ProtocolParams:
        variant = self.protocol if variant is None else variant
        alpha, beta = self.weights[variant]
        return ProtocolParams(
            variant, alpha, beta,
            dr=tuple(c.dr for c in self.classes),
            deadline=tuple(c.deadline for c in self.classes),
            queue_capacity=self.queue_capacity_per_class,
            initial_energy=self.initial_energy,
        )

    def with_overrides(self, **kw) -> "ScenarioConfig":
        # switching protocol picks up that protocol's stored weights
        if "protocol" in kw:
            a, b = self.weights[kw["protocol"]]
            kw.setdefault("alpha", a)
            kw.setdefault("beta", b)
        return dataclasses.replace(self, **kw)


# -- file format ---------------------------------------------------------

_UNITS = {
    "": 1.0, "s": 1.0, "ms": 1e-3, "m": 1.0, "j": 1.0, "mj": 1e-3, "a": 1.0, "ma": 1e-3,
    "v": 1.0, "bps": 1.0, "kbps": 1e3, "mbps": 1e6, "fps": 1.0, "pps": 1.0, "pckts": 1.0, "%": 0.01,
}
_NUM = re.compile(r"^([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Z%]*)$")

_ALIASES = {
    "xd": "warmup_duration", "queue_size": "queue_capacity_per_class", "queue_capacity": "queue_capacity_per_class",
    "seed": "rng_seed", "realizations": "realization_count", "range": "radio_range",
}
_CODEC_KEYS = {"width", "height", "qp", "fp", "roi_ratio", "fr_standby", "fr_rush", "packets_per_frame"}
_CLASS_KEYS = {"dr", "deadline", "pr_standby", "pr_rush"}


def _number(text: str, lineno: int) -> float:
    m = _NUM.match(text)
    if not m or m.group(2).lower() not in _UNITS:
        raise ConfigError(f"line {lineno}: cannot parse number {text!r}")
    return float(m.group(1)) * _UNITS[m.group(2).lower()]


def parse_config(text: str, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Parse scenario text on top of ``base`` (the default parameter set)."""
    base = base or ScenarioConfig()
    top: dict = {}
    codec: dict = {}
    classes = {c.cls: dataclasses.asdict(c) for c in base.classes}
    weights = dict(base.weights)
    fields = {f.name: f for f in dataclasses.fields(ScenarioConfig)}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        key = _ALIASES.get(key, key)
        if "." in key:
            head, sub = key.split(".", 1)
            if head in ("roi", "bkgd") and sub in _CLASS_KEYS:
                classes[TrafficClass.parse(head)][sub] = _number(value, lineno)
            elif head in ("qbsa", "eqbsa", "mmspeed") and sub in ("alpha", "beta"):
                v = Variant.parse(head)
                a, b = weights[v]
                weights[v] = (_number(value, lineno), b) if sub == "alpha" else (a, _number(value, lineno))
            elif head == "codec" and sub in _CODEC_KEYS:
                codec[sub] = _number(value, lineno)
            else:
                raise ConfigError(f"line {lineno}: unknown key {key!r}")
        elif key in _CODEC_KEYS:
            codec[key] = _number(value, lineno)
        elif key == "protocol":
            try:
                top["protocol"] = Variant.parse(value)
            except ValueError:
                raise ConfigError(f"line {lineno}: unknown protocol {value!r}") from None
        elif key in fields and key not in ("weights", "classes", "codec"):
            num = _number(value, lineno)
            top[key] = int(num) if fields[key].type in ("int", int) else num
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    p = top.get("protocol", base.protocol)
    a, b = weights[p]
    top["alpha"], top["beta"] = top.get("alpha", a), top.get("beta", b)
    try:
        for k in ("width", "height", "qp", "fp", "packets_per_frame"):
            if k in codec:
                codec[k] = int(codec[k])
        codec_cfg = dataclasses.replace(base.codec, **codec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cls_specs = tuple(ClassSpec(**classes[c]) for c in (TrafficClass.ROI, TrafficClass.BKGD))
    return dataclasses.replace(base, **top, weights=weights, classes=cls_specs, codec=codec_cfg)


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: {exc.strerror}") from None
    try:
        return parse_config(text)
    except ConfigError as exc:
        raise ConfigError(f"{p}: {exc}") from None


# -- deployment ----------------------------------------------------------

STREAMS = {"deployment": 0, "links": 1, "fallback": 2, "content": 3}


def stream_seed(seed: int, realization: int, stream: str) -> int:
    """Independent integer seed for a named RNG stream of one realization."""
    ss = np.random.SeedSequence([seed, realization, STREAMS[stream]])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class Deployment:
    positions: np.ndarray  # (node_count + 1, 2); the last row is the sink
    sink_id: int
    video_node_ids: frozenset[int]
    rush_ids: frozenset[int]
    realization: int
    content_seed: int

    @property
    def node_count(self) -> int:
        return self.sink_id

    @property
    def source_ids(self) -> frozenset[int]:
        return self.video_node_ids


def deploy(config: ScenarioConfig, realization_index: int) -> Deployment:
    """Uniform i.i.d. node placement, video nodes and event-detecting sources.

    Depends only on (rng_seed, realization_index), never on the protocol.
    """
    if not 0 <= realization_index < config.realization_count:
        raise ConfigError(f"realization index {realization_index} outside [0, {config.realization_count})")
    rng = np.random.default_rng(stream_seed(config.rng_seed, realization_index, "deployment"))
    n = config.node_count
    pos = np.empty((n + 1, 2))
    pos[:n, 0] = rng.uniform(0, config.terrain_width, n)
    pos[:n, 1] = rng.uniform(0, config.terrain_height, n)
    pos[n] = config.sink_position
    video = rng.choice(n, size=config.video_node_count, replace=False)
    rush = rng.choice(video, size=config.rush_source_count, replace=False) if config.rush_source_count else []
    pos.setflags(write=False)
    return Deployment(
        pos, n, frozenset(int(v) for v in video), frozenset(int(v) for v in rush),
        realization_index, stream_seed(config.rng_seed, realization_index, "content"),
    )


# -- timeline ------------------------------------------------------------

@dataclass(frozen=True, order=True)
class AppEvent:
    time: float
    kind: str  # "beacon" | "capture" | "mode-switch"
    node: int = -1
    frame_index: int = -1
    mode: Mode = Mode.STANDBY


def capture_times(config: ScenarioConfig, rush: bool) -> list[tuple[float, Mode]]:
    """Capture instants of one video node: Standby from XD, Rush from the event."""
    fr_s, fr_r = config.codec.fr_standby, config.codec.fr_rush
    end = config.video_end
    switch = config.event_time if rush else end
    out = []
    k = 0
    while (t := config.warmup_duration + k / fr_s) < switch - 1e-9:
        out.append((t, Mode.STANDBY))
        k += 1
    if rush:
        k = 0
        while (t := config.event_time + k / fr_r) < end - 1e-9:
            out.append((t, Mode.RUSH))
            k += 1
    return out


def timeline(config: ScenarioConfig, deployment: Deployment | None = None) -> list[AppEvent]:
    """Application events up to the end of video capture, time ordered.

    Beacon rounds are listed from t=0 up to the video end; the engine keeps
    beaconing at the same period while traffic is still in flight. Without
    a deployment only beacon rounds and the event instant are listed.
    """
    events = []
    k = 0
    while (t := k * config.beacon_period) < config.video_end:
        events.append(AppEvent(t, "beacon"))
        k += 1
    if deployment is not None:
        for node in sorted(deployment.video_node_ids):
            rush = node in deployment.rush_ids
            for idx, (t, mode) in enumerate(capture_times(config, rush)):
                events.append(AppEvent(t, "capture", node, idx, mode))
            if rush:
                events.append(AppEvent(config.event_time, "mode-switch", node, -1, Mode.RUSH))
    else:
        events.append(AppEvent(config.event_time, "mode-switch"))
    order = {"beacon": 0, "mode-switch": 1, "capture": 2}
    events.sort(key=lambda e: (e.time, order[e.kind], e.node, e.frame_index))
    return events
