"""Synthetic test sequences and raw 8-bit luma file I/O."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .frames import Frame


def synth_source(seed: int, frame_count: int, dims: tuple[int, int] = (176, 144), fps: float = 1.0,
                 start_time: float = 0.0, start_index: int = 0) -> list[Frame]:
    """Deterministic moving scene: translating textured gradient + bouncing rectangle.

    Motion is a few pixels per frame so co-located concealment stays
    meaningful.
    """
    w, h = dims
    rng = np.random.default_rng(seed)
    # fixed texture that translates with the background
    tex = rng.normal(0.0, 10.0, size=(h, 2 * w))
    vx = rng.uniform(1.0, 3.0)
    period = rng.uniform(60.0, 120.0)
    rw, rh = int(w * 0.25), int(h * 0.3)
    px, py = rng.uniform(0, w - rw), rng.uniform(0, h - rh)
    vpx, vpy = rng.uniform(2.0, 4.0), rng.uniform(1.0, 3.0)
    bright = rng.integers(200, 240)
    yy, xx = np.mgrid[0:h, 0:w]
    frames = []
    for k in range(start_index + frame_count):
        if k >= start_index:
            shift = vx * k
            g = 128 + 70 * np.sin(2 * np.pi * (xx + shift) / period) * np.cos(np.pi * yy / h)
            g += tex[:, (np.arange(w) + int(shift)) % (2 * w)]
            x0, y0 = int(px), int(py)
            g[y0:y0 + rh, x0:x0 + rw] = bright
            g[y0 + rh // 4:y0 + 3 * rh // 4, x0 + rw // 4:x0 + 3 * rw // 4] = 255 - bright
            frames.append(Frame(np.clip(np.rint(g), 0, 255), k, start_time + (k - start_index) / fps))
        # bounce
        px += vpx
        py += vpy
        if px < 0 or px > w - rw:
            vpx = -vpx
            px = min(max(px, 0), w - rw)
        if py < 0 or py > h - rh:
            vpy = -vpy
            py = min(max(py, 0), h - rh)
    return frames


def read_luma(path, dims: tuple[int, int] = (176, 144), fps: float = 1.0) -> list[Frame]:
    """Read a headerless frame-sequential 8-bit luma file (``.y``)."""
    w, h = dims
    raw = Path(path).read_bytes()
    if len(raw) % (w * h):
        raise ValueError(f"{path}: {len(raw)} bytes is not a multiple of {w}x{h}")
    a = np.frombuffer(raw, dtype=np.uint8).reshape(-1, h, w)
    return [Frame(a[k].copy(), k, k / fps) for k in range(len(a))]


def write_luma(path, frames) -> None:
    with open(path, "wb") as f:
        for fr in frames:
            f.write(np.ascontiguousarray(fr.luma, dtype=np.uint8).tobytes())
