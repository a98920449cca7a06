"""Luma PSNR."""
from __future__ import annotations

import math

import numpy as np

from .frames import Frame

PSNR_CAP = 99.0


def mse(reference, reconstructed) -> float:
    a = reference.luma if isinstance(reference, Frame) else np.asarray(reference)
    b = reconstructed.luma if isinstance(reconstructed, Frame) else np.asarray(reconstructed)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    d = a.astype(np.float64) - b.astype(np.float64)
    return float(np.mean(d * d))


def psnr(reference, reconstructed, cap: float = PSNR_CAP) -> float:
    """10*log10(255^2 / MSE) in dB; identical inputs return ``cap``."""
    m = mse(reference, reconstructed)
    if m == 0:
        return cap
    return min(cap, 10.0 * math.log10(255.0 ** 2 / m))
