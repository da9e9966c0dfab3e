"""Error measures for comparing renders: log-HDR MSE and multi-scale
structural dissimilarity on tone-mapped 8-bit images."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.ndimage import correlate1d

from .errors import ContractError, NonFiniteError

LOG_EPS = 1e-6
WINDOW_RADIUS = 5  # 11x11 window
WINDOW_SIGMA = 1.5
C1 = (0.01 * 255.0) ** 2
C2 = (0.03 * 255.0) ** 2
# Per-scale weights from the standard five-scale decomposition; truncated
# and renormalized when the input only supports fewer dyadic scales.
SCALE_WEIGHTS = (0.0448, 0.2856, 0.3001, 0.2363, 0.1333)
MIN_SIDE = 32


@dataclass(frozen=True)
class MetricPair:
    """One comparison's worth of numbers: log-HDR MSE and DSSIM."""

    mse: float
    dssim: float

    def __post_init__(self):
        if not (math.isfinite(self.mse) and math.isfinite(self.dssim)):
            raise NonFiniteError("metric values must be finite")
        if self.mse < 0 or not 0.0 <= self.dssim <= 1.0:
            raise ContractError("mse must be >= 0 and dssim in [0, 1]")


def _image3(name, arr):
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ContractError(f"{name} must be (h, w, 3), got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NonFiniteError(f"{name} must be finite")
    return a


def mse_log(a, b, mask: Optional[np.ndarray] = None) -> float:
    """Mean over valid pixels and channels of (ln(a+eps) - ln(b+eps))^2."""
    aa, bb = _image3("a", a), _image3("b", b)
    if aa.shape != bb.shape:
        raise ContractError(f"shape mismatch: {aa.shape} vs {bb.shape}")
    if np.any(aa < 0) or np.any(bb < 0):
        raise ContractError("HDR radiance must be >= 0")
    if mask is None:
        mask = np.ones(aa.shape[:2], dtype=bool)
    if mask.shape != aa.shape[:2] or mask.dtype != np.bool_:
        raise ContractError("mask must be an (h, w) bool array")
    if not mask.any():
        raise ContractError("mask selects no pixels")
    d = np.log(aa[mask] + LOG_EPS) - np.log(bb[mask] + LOG_EPS)
    return float(np.mean(d * d))


def _window() -> np.ndarray:
    g = np.exp(-0.5 * (np.arange(-WINDOW_RADIUS, WINDOW_RADIUS + 1) / WINDOW_SIGMA) ** 2)
    return g / g.sum()


def _filter2(img: np.ndarray, g: np.ndarray) -> np.ndarray:
    # scipy's "reflect" duplicates the edge sample, matching symmetric padding
    t = correlate1d(img, g, axis=0, mode="reflect")
    return correlate1d(t, g, axis=1, mode="reflect")


def _ssim_stats(x, y, g):
    """Mean luminance and contrast-structure terms over every window center."""
    mu1, mu2 = _filter2(x, g), _filter2(y, g)
    s1 = _filter2(x * x, g) - mu1 * mu1
    s2 = _filter2(y * y, g) - mu2 * mu2
    s12 = _filter2(x * y, g) - mu1 * mu2
    lum = (2.0 * mu1 * mu2 + C1) / (mu1 * mu1 + mu2 * mu2 + C1)
    cs = (2.0 * s12 + C2) / (s1 + s2 + C2)
    return float(lum.mean()), float(cs.mean())


def _halve(img: np.ndarray) -> np.ndarray:
    he, we = (img.shape[0] // 2) * 2, (img.shape[1] // 2) * 2
    return img[:he, :we].reshape(he // 2, 2, we // 2, 2).mean(axis=(1, 3))


def _ms_ssim_channel(x, y, weights, g) -> float:
    result = 1.0
    last = len(weights) - 1
    for si, wgt in enumerate(weights):
        lum, cs = _ssim_stats(x, y, g)
        term = lum * cs if si == last else cs
        result *= max(term, 0.0) ** wgt
        if si < last:
            x, y = _halve(x), _halve(y)
    return result


def scale_count(height: int, width: int) -> int:
    """Dyadic scales used for the given size; the coarsest stays >= 8 px."""
    return min(len(SCALE_WEIGHTS), int(math.floor(math.log2(min(height, width)))) - 2)


def ms_ssim(a, b) -> float:
    """Multi-scale SSIM of two tone-mapped images, averaged over channels.

    11x11 Gaussian window (sigma 1.5), stabilizers scaled for an 8-bit
    value range, 2x2 mean-pool between scales, luminance term applied at
    the coarsest scale only.
    """
    aa, bb = _image3("a", a), _image3("b", b)
    if aa.shape != bb.shape:
        raise ContractError(f"shape mismatch: {aa.shape} vs {bb.shape}")
    if min(aa.shape[0], aa.shape[1]) < MIN_SIDE:
        raise ContractError(f"images must be at least {MIN_SIDE}x{MIN_SIDE}")
    n = scale_count(aa.shape[0], aa.shape[1])
    weights = np.asarray(SCALE_WEIGHTS[:n])
    weights = weights / weights.sum()
    g = _window()
    vals = [
        _ms_ssim_channel(aa[:, :, ch], bb[:, :, ch], weights, g) for ch in range(3)
    ]
    return float(np.mean(vals))


def dssim(a, b) -> float:
    """(1 - ms_ssim)/2, clamped against negative float dust."""
    return max(0.0, (1.0 - ms_ssim(a, b)) / 2.0)
