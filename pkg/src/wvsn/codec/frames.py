"""Dual-mode intra frame coding, packetization and loss concealment."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..traffic import Mode, TrafficClass
from .entropy import Bitstream, EntropyDecodeError, block_code_lengths, decode_blocks, encode_blocks
from .transform import NCOEF, dequantize_inverse, frequency_select, to_samples, transform_quantize

MB = 16
BLOCKS_PER_MB = (MB // 4) ** 2
HEADER_BITS = 128  # frame index, packet id, class, MB range, bit length


@dataclass(frozen=True)
class CodecConfig:
    width: int = 176
    height: int = 144
    qp: int = 32
    fp: int = 6
    roi_ratio: float = 0.5
    fr_standby: float = 1.0
    fr_rush: float = 3.0
    packets_per_frame: int = 33

    def __post_init__(self):
        if self.width % MB or self.height % MB or self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame dimensions must be positive multiples of {MB}: {self.width}x{self.height}")
        if not 1 <= self.fp <= NCOEF:
            raise ValueError(f"fp must be in [1, {NCOEF}], got {self.fp}")
        if not 0.0 <= self.roi_ratio <= 1.0:
            raise ValueError(f"roi_ratio must be in [0, 1], got {self.roi_ratio}")
        if self.fr_standby <= 0 or self.fr_rush <= 0:
            raise ValueError("frame rates must be positive")
        if not 1 <= self.packets_per_frame <= self.mb_count:
            raise ValueError(f"packets_per_frame must be in [1, {self.mb_count}]")

    @property
    def mb_cols(self) -> int:
        return self.width // MB

    @property
    def mb_rows(self) -> int:
        return self.height // MB

    @property
    def mb_count(self) -> int:
        return self.mb_cols * self.mb_rows


@dataclass
class Frame:
    luma: np.ndarray  # (height, width) uint8
    index: int = 0
    capture_time: float = 0.0

    def __post_init__(self):
        self.luma = np.asarray(self.luma, dtype=np.uint8)
        if self.luma.ndim != 2:
            raise ValueError("luma must be a 2-D array")


@dataclass(frozen=True)
class MacroblockLabel:
    mb_index: int
    cls: TrafficClass


@dataclass(frozen=True)
class EncodedPacket:
    frame_index: int
    packet_id: int
    cls: TrafficClass
    mb_indices: tuple[int, ...]
    payload: Bitstream

    @property
    def bits(self) -> int:
        return self.payload.nbits + HEADER_BITS


@dataclass
class EncodedFrame:
    frame_index: int
    mode: Mode
    labels: list[MacroblockLabel]
    packets: list[EncodedPacket]
    recon: np.ndarray = field(repr=False)  # encoder-side reference reconstruction

    @property
    def bits(self) -> int:
        return sum(p.bits for p in self.packets)

    def payload_bits(self, cls: TrafficClass | None = None) -> int:
        return sum(p.payload.nbits for p in self.packets if cls is None or p.cls == cls)


def partition_roi(config: CodecConfig, dims: tuple[int, int] | None = None) -> list[MacroblockLabel]:
    """Label macroblocks ROI/BKGD with a centered rectangle.

    ``dims`` is (width, height) in pixels and defaults to the config's. The
    ROI holds exactly ``floor(roi_ratio * mb_count)`` macroblocks: the
    largest centered rectangle that fits, topped up with the macroblocks
    nearest the frame center (row-major on ties).
    """
    w, h = dims if dims is not None else (config.width, config.height)
    cols, rows = w // MB, h // MB
    n = cols * rows
    target = math.floor(config.roi_ratio * n + 1e-9)
    roi: set[int] = set()
    if target:
        rc = min(cols, max(1, round(math.sqrt(target * cols / rows))))
        rr = min(rows, target // rc)
        r0, c0 = (rows - rr) // 2, (cols - rc) // 2
        roi = {r * cols + c for r in range(r0, r0 + rr) for c in range(c0, c0 + rc)}
        cy, cx = (rows - 1) / 2, (cols - 1) / 2
        rest = sorted(
            (m for m in range(n) if m not in roi),
            key=lambda m: ((m // cols - cy) ** 2 + (m % cols - cx) ** 2, m),
        )
        roi.update(rest[: target - len(roi)])
    return [MacroblockLabel(m, TrafficClass.ROI if m in roi else TrafficClass.BKGD) for m in range(n)]


def frame_to_blocks(luma: np.ndarray) -> np.ndarray:
    """(H, W) samples -> (mb_count, 16, 4, 4) blocks, raster order inside each MB."""
    h, w = luma.shape
    a = luma.reshape(h // MB, 4, 4, w // MB, 4, 4)
    # axes: mb_row, blk_row, y, mb_col, blk_col, x
    a = a.transpose(0, 3, 1, 4, 2, 5)
    return a.reshape((h // MB) * (w // MB), BLOCKS_PER_MB, 4, 4)


def blocks_to_frame(blocks: np.ndarray, width: int, height: int) -> np.ndarray:
    a = blocks.reshape(height // MB, width // MB, 4, 4, 4, 4)
    return a.transpose(0, 2, 4, 1, 3, 5).reshape(height, width)


@dataclass
class _Plan:
    labels: list[MacroblockLabel]
    levels: np.ndarray  # (mb_count, 16 blocks, 16 coefs)
    groups: list[tuple[TrafficClass, np.ndarray]]  # per packet: class, MB indices


def _split_counts(n_roi: int, n_bkgd: int, packets: int) -> tuple[int, int]:
    if n_roi == 0:
        return 0, packets
    if n_bkgd == 0:
        return packets, 0
    k = round(packets * n_roi / (n_roi + n_bkgd))
    k = min(max(k, 1), packets - 1, n_roi)
    return k, min(packets - k, n_bkgd)


def _plan(frame: Frame, mode: Mode, config: CodecConfig, freq_select: bool = True) -> _Plan:
    luma = frame.luma
    if luma.shape != (config.height, config.width):
        raise ValueError(f"frame is {luma.shape[1]}x{luma.shape[0]}, codec expects {config.width}x{config.height}")
    blocks = frame_to_blocks(luma.astype(np.float64) - 128.0)
    n = config.mb_count
    levels = transform_quantize(blocks.reshape(-1, 4, 4), config.qp).reshape(n, BLOCKS_PER_MB, NCOEF)
    if mode == Mode.RUSH:
        labels = partition_roi(config)
        roi = np.array([lb.mb_index for lb in labels if lb.cls == TrafficClass.ROI], dtype=int)
        bkgd = np.array([lb.mb_index for lb in labels if lb.cls == TrafficClass.BKGD], dtype=int)
        if freq_select and len(bkgd):
            levels[bkgd] = frequency_select(levels[bkgd], config.fp)
        k_roi, k_bkgd = _split_counts(len(roi), len(bkgd), config.packets_per_frame)
        groups = [(TrafficClass.ROI, g) for g in np.array_split(roi, k_roi)] if k_roi else []
        groups += [(TrafficClass.BKGD, g) for g in np.array_split(bkgd, k_bkgd)] if k_bkgd else []
    else:
        # Standby: one stream, no frequency selection, carried as BKGD class
        labels = [MacroblockLabel(m, TrafficClass.BKGD) for m in range(n)]
        groups = [(TrafficClass.BKGD, g) for g in np.array_split(np.arange(n), config.packets_per_frame)]
    return _Plan(labels, levels, groups)


def _reconstruct(levels: np.ndarray, qp: int) -> np.ndarray:
    """(k, 16, 16) MB levels -> (k, 16, 4, 4) uint8 block samples."""
    k = len(levels)
    res = dequantize_inverse(levels.reshape(-1, NCOEF), qp)
    return to_samples(res).reshape(k, BLOCKS_PER_MB, 4, 4)


def encode_frame(frame: Frame, mode: Mode, config: CodecConfig, freq_select: bool = True) -> EncodedFrame:
    """Encode one frame into ``packets_per_frame`` class-labelled packets.

    ``freq_select=False`` disables frequency selection on the background
    stream (used to check that ``fp=16`` is a no-op).
    """
    plan = _plan(frame, mode, config, freq_select)
    packets = [
        EncodedPacket(
            frame.index, pid, cls, tuple(int(m) for m in mbs),
            encode_blocks(plan.levels[mbs].reshape(-1, NCOEF)),
        )
        for pid, (cls, mbs) in enumerate(plan.groups)
    ]
    recon = blocks_to_frame(_reconstruct(plan.levels, config.qp), config.width, config.height)
    return EncodedFrame(frame.index, mode, plan.labels, packets, recon)


def packet_bit_lengths(frame: Frame, mode: Mode, config: CodecConfig) -> list[tuple[TrafficClass, int]]:
    """Per-packet (class, total bits) of :func:`encode_frame` without coding.

    Used by the network engine for sources whose video is not scored.
    """
    plan = _plan(frame, mode, config)
    blen = block_code_lengths(plan.levels.reshape(-1, NCOEF)).reshape(config.mb_count, BLOCKS_PER_MB).sum(axis=1)
    return [(cls, int(blen[mbs].sum()) + HEADER_BITS) for cls, mbs in plan.groups]


@dataclass
class FrameLayout:
    """What the network needs from an encoded frame, without the bitstreams.

    ``packets`` lists (class, macroblock indices, total bits) per packet id;
    ``recon_blocks`` is the decoder output for every macroblock, which equals
    what :func:`decode_packet` returns because entropy coding is lossless.
    """
    frame_index: int
    mode: Mode
    packets: list[tuple[TrafficClass, tuple[int, ...], int]]
    recon_blocks: np.ndarray = field(repr=False)  # (mb_count, 16, 4, 4) uint8


def frame_layout(frame: Frame, mode: Mode, config: CodecConfig) -> FrameLayout:
    plan = _plan(frame, mode, config)
    blen = block_code_lengths(plan.levels.reshape(-1, NCOEF)).reshape(config.mb_count, BLOCKS_PER_MB).sum(axis=1)
    packets = [(cls, tuple(int(m) for m in mbs), int(blen[mbs].sum()) + HEADER_BITS) for cls, mbs in plan.groups]
    return FrameLayout(frame.index, mode, packets, _reconstruct(plan.levels, config.qp))


def assemble_frame(layout: FrameLayout, received, previous: np.ndarray | None, config: CodecConfig,
                   capture_time: float = 0.0) -> Frame:
    """Same result as :func:`decode_frame` on the packets whose ids are in ``received``."""
    if previous is None:
        mbs = np.full((config.mb_count, BLOCKS_PER_MB, 4, 4), 128, dtype=np.uint8)
    else:
        mbs = frame_to_blocks(np.asarray(previous, dtype=np.uint8)).copy()
    for pid in received:
        idx = list(layout.packets[pid][1])
        mbs[idx] = layout.recon_blocks[idx]
    return Frame(blocks_to_frame(mbs, config.width, config.height), layout.frame_index, capture_time)


@lru_cache(maxsize=8192)
def _decode_payload(payload: Bitstream, nmb: int, qp: int) -> np.ndarray:
    levels = decode_blocks(payload, nmb * BLOCKS_PER_MB).reshape(nmb, BLOCKS_PER_MB, NCOEF)
    return _reconstruct(levels, qp)


def decode_packet(packet: EncodedPacket, config: CodecConfig) -> np.ndarray:
    """Decoded samples for the packet's macroblocks, shape (k, 16, 4, 4).

    Raises :class:`EntropyDecodeError` if the payload is corrupt.
    """
    return _decode_payload(packet.payload, len(packet.mb_indices), config.qp)


def decode_frame(
    packets,
    previous: np.ndarray | Frame | None,
    config: CodecConfig,
    frame_index: int = 0,
    capture_time: float = 0.0,
) -> Frame:
    """Rebuild a frame from any subset of its packets.

    Macroblocks without a (valid) packet are copied from the co-located
    macroblock of ``previous``; with no previous frame they are set to 128.
    """
    if isinstance(previous, Frame):
        previous = previous.luma
    if previous is None:
        mbs = np.full((config.mb_count, BLOCKS_PER_MB, 4, 4), 128, dtype=np.uint8)
    else:
        mbs = frame_to_blocks(np.asarray(previous, dtype=np.uint8)).copy()
    for p in packets:
        try:
            samples = decode_packet(p, config)
        except EntropyDecodeError:
            continue
        mbs[list(p.mb_indices)] = samples
    return Frame(blocks_to_frame(mbs, config.width, config.height), frame_index, capture_time)
