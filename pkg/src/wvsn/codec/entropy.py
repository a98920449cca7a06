"""Run-length + exp-Golomb coding of zigzag coefficient blocks.

Each block is coded as ``ue(nnz)`` followed by, for every nonzero level in
zigzag order, ``ue(zero_run_before)`` and ``ue(level_code)`` where the signed
nonzero level ``k`` maps to ``2|k| - 2 + (k < 0)``. An all-zero block costs a
single bit.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .transform import NCOEF


class EntropyDecodeError(ValueError):
    """Truncated or corrupt bitstream."""


@dataclass(frozen=True)
class Bitstream:
    data: bytes
    nbits: int

    @classmethod
    def empty(cls) -> "Bitstream":
        return cls(b"", 0)

    def bits(self) -> str:
        if self.nbits == 0:
            return ""
        s = bin(int.from_bytes(self.data, "big"))[2:].zfill(8 * len(self.data))
        return s[: self.nbits]


class BitWriter:
    def __init__(self):
        self._parts: list[str] = []
        self.nbits = 0

    def write_ue(self, value: int) -> None:
        s = bin(value + 1)[2:]
        self._parts.append("0" * (len(s) - 1))
        self._parts.append(s)
        self.nbits += 2 * len(s) - 1

    def getvalue(self) -> Bitstream:
        if self.nbits == 0:
            return Bitstream.empty()
        s = "".join(self._parts)
        pad = -len(s) % 8
        data = int(s + "0" * pad, 2).to_bytes((len(s) + pad) // 8, "big")
        return Bitstream(data, self.nbits)


class BitReader:
    def __init__(self, stream: Bitstream):
        self._s = stream.bits()
        self.pos = 0

    def at_end(self) -> bool:
        return self.pos >= len(self._s)

    def read_ue(self) -> int:
        s = self._s
        one = s.find("1", self.pos)
        if one < 0:
            raise EntropyDecodeError(f"unterminated exp-Golomb prefix at bit {self.pos}")
        nz = one - self.pos
        end = one + nz + 1
        if end > len(s):
            raise EntropyDecodeError(f"truncated exp-Golomb code at bit {self.pos}")
        self.pos = end
        return int(s[one:end], 2) - 1


def _level_code(k: int) -> int:
    return 2 * abs(k) - 2 + (k < 0)


def _level_from_code(c: int) -> int:
    mag = c // 2 + 1
    return -mag if c & 1 else mag


def write_block(w: BitWriter, block) -> None:
    nz = [(i, int(v)) for i, v in enumerate(block) if v]
    w.write_ue(len(nz))
    last = -1
    for i, v in nz:
        w.write_ue(i - last - 1)
        w.write_ue(_level_code(v))
        last = i


def read_block(r: BitReader) -> list[int]:
    out = [0] * NCOEF
    nnz = r.read_ue()
    if nnz > NCOEF:
        raise EntropyDecodeError(f"block claims {nnz} nonzero coefficients")
    pos = -1
    for _ in range(nnz):
        pos += r.read_ue() + 1
        if pos >= NCOEF:
            raise EntropyDecodeError("coefficient run overflows block")
        out[pos] = _level_from_code(r.read_ue())
    return out


def encode_blocks(levels) -> Bitstream:
    """Entropy code a sequence of 16-coefficient zigzag blocks."""
    w = BitWriter()
    for block in np.asarray(levels, dtype=np.int64).reshape(-1, NCOEF).tolist():
        write_block(w, block)
    return w.getvalue()


def decode_blocks(stream: Bitstream, nblocks: int | None = None) -> np.ndarray:
    """Inverse of :func:`encode_blocks`.

    Reads until the stream is exhausted, or exactly ``nblocks`` blocks when
    given. Raises :class:`EntropyDecodeError` on any inconsistency.
    """
    r = BitReader(stream)
    blocks = []
    while not r.at_end() if nblocks is None else len(blocks) < nblocks:
        blocks.append(read_block(r))
    if not r.at_end():
        raise EntropyDecodeError(f"{stream.nbits - r.pos} trailing bits after {len(blocks)} blocks")
    return np.array(blocks, dtype=np.int32).reshape(-1, NCOEF)


def ue_length(v) -> np.ndarray:
    """Bit length of ue(v), vectorized."""
    v = np.asarray(v, dtype=np.int64)
    return 2 * np.floor(np.log2(v + 1)).astype(np.int64) + 1


def block_code_lengths(levels) -> np.ndarray:
    """Per-block code lengths in bits, without building the bitstream."""
    lv = np.asarray(levels, dtype=np.int64).reshape(-1, NCOEF)
    nzmask = lv != 0
    nnz = nzmask.sum(axis=1)
    idx = np.arange(NCOEF)
    # position of the previous nonzero (or -1) for every coefficient slot
    marked = np.where(nzmask, idx, -1)
    prev = np.maximum.accumulate(np.concatenate([np.full((len(lv), 1), -1), marked[:, :-1]], axis=1), axis=1)
    runs = idx - prev - 1
    codes = 2 * np.abs(lv) - 2 + (lv < 0)
    per_coef = np.where(nzmask, ue_length(np.where(nzmask, runs, 0)) + ue_length(np.where(nzmask, codes, 0)), 0)
    return ue_length(nnz) + per_coef.sum(axis=1)
