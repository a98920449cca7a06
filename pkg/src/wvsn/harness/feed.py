"""Video content for the network runs.

Every video node films the same synthetic scene (one per realization),
sampled on the Rush-mode clock. A capture at time ``t`` shows scene frame
``round((t - XD) * fr_rush)``, so Standby and Rush captures of the same
instant agree. Layouts are cached per (scene frame, mode), which makes the
packets fed to each protocol of a realization identical by construction.
"""
from __future__ import annotations

import math

from ..codec import Frame, FrameLayout, frame_layout, synth_source
from ..scenario import Deployment, ScenarioConfig
from ..traffic import Mode


class VideoFeed:
    def __init__(self, config: ScenarioConfig, content_seed: int):
        self.config = config
        self.codec = config.codec
        self.content_seed = content_seed
        self._fps = self.codec.fr_rush
        n = math.ceil((config.video_end - config.warmup_duration) * self._fps) + 1
        self.frames: list[Frame] = synth_source(
            content_seed, n, (self.codec.width, self.codec.height), self._fps, config.warmup_duration)
        self._layouts: dict[tuple[int, Mode], FrameLayout] = {}

    @classmethod
    def for_deployment(cls, config: ScenarioConfig, deployment: Deployment) -> "VideoFeed":
        return cls(config, deployment.content_seed)

    def scene_index(self, t: float) -> int:
        return round((t - self.config.warmup_duration) * self._fps)

    def scene_frame(self, t: float) -> Frame:
        return self.frames[self.scene_index(t)]

    def layout(self, t: float, mode: Mode) -> FrameLayout:
        key = (self.scene_index(t), Mode(mode))
        lay = self._layouts.get(key)
        if lay is None:
            lay = self._layouts[key] = frame_layout(self.frames[key[0]], key[1], self.codec)
        return lay

    def packets(self, node: int, frame_index: int, mode: Mode, capture_time: float):
        """(class, bits) per packet id, as the network engine expects."""
        return [(int(cls), bits) for cls, _, bits in self.layout(capture_time, mode).packets]
