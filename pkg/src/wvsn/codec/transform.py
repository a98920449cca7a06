"""4x4 block transform, scalar quantization and frequency selection.

Blocks are handled in batches: arrays of shape ``(n, 4, 4)`` in the pixel
domain and ``(n, 16)`` in the zigzag-ordered coefficient domain.
"""
from __future__ import annotations

import numpy as np

BLOCK = 4
NCOEF = BLOCK * BLOCK

ZIGZAG = np.array([0, 1, 4, 8, 5, 2, 3, 6, 9, 12, 13, 10, 7, 11, 14, 15])
INV_ZIGZAG = np.argsort(ZIGZAG)


def _dct_matrix(n: int = BLOCK) -> np.ndarray:
    k = np.arange(n)[:, None]
    x = np.arange(n)[None, :]
    c = np.cos(np.pi * (2 * x + 1) * k / (2 * n))
    c[0] *= np.sqrt(1.0 / n)
    c[1:] *= np.sqrt(2.0 / n)
    return c


DCT4 = _dct_matrix()


def qstep(qp: int) -> float:
    """Quantizer step size; doubles every 6 QP, 1.0 at QP 4."""
    return 2.0 ** ((qp - 4) / 6.0)


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def forward_dct(blocks: np.ndarray) -> np.ndarray:
    return DCT4 @ blocks @ DCT4.T


def inverse_dct(coefs: np.ndarray) -> np.ndarray:
    return DCT4.T @ coefs @ DCT4


def transform_quantize(blocks, qp: int) -> np.ndarray:
    """Transform and quantize signed residual blocks.

    ``blocks`` holds samples already shifted to the signed range
    (sample - 128), shape ``(4, 4)`` or ``(n, 4, 4)``. Returns int32
    zigzag-ordered levels of shape ``(16,)`` or ``(n, 16)``.
    """
    b = np.asarray(blocks, dtype=np.float64)
    single = b.ndim == 2
    if single:
        b = b[None]
    c = forward_dct(b).reshape(len(b), NCOEF)[:, ZIGZAG]
    levels = _round_half_away(c / qstep(qp)).astype(np.int32)
    return levels[0] if single else levels


def dequantize_inverse(levels, qp: int) -> np.ndarray:
    """Inverse of :func:`transform_quantize` up to quantization error.

    Returns float residual blocks (not rounded, not clipped).
    """
    lv = np.asarray(levels, dtype=np.float64)
    single = lv.ndim == 1
    if single:
        lv = lv[None]
    c = (lv * qstep(qp))[:, INV_ZIGZAG].reshape(len(lv), BLOCK, BLOCK)
    out = inverse_dct(c)
    return out[0] if single else out


def frequency_select(levels, fp: int) -> np.ndarray:
    """Keep the first ``fp`` zigzag coefficients of each block, zero the rest."""
    if not 1 <= fp <= NCOEF:
        raise ValueError(f"fp must be in [1, {NCOEF}], got {fp}")
    out = np.array(levels, copy=True)
    out[..., fp:] = 0
    return out


def to_samples(residual: np.ndarray) -> np.ndarray:
    """Shift reconstructed residuals back to 8-bit samples."""
    return np.clip(_round_half_away(residual) + 128, 0, 255).astype(np.uint8)
