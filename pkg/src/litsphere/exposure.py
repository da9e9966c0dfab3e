"""LDR capture simulation, HDR log encoding, and display tone mapping.

An exposure bracket is summarized by two luminance anchors (the 5th and 95th
percentiles of the valid pixels); 8-bit capture maps radiance affinely into
that bracket, quantizes to 256 levels, and maps back, so values inside the
bracket move by at most half a quantization step and values outside clamp to
the anchors exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, NonFiniteError

LOG_EPS = 1e-6
GAMMA = 2.2


@dataclass(frozen=True)
class ExposureParams:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise NonFiniteError("exposure anchors must be finite")
        if self.lo < 0 or self.hi < self.lo:
            raise ContractError(f"need 0 <= lo <= hi, got ({self.lo}, {self.hi})")

    def to_json(self) -> str:
        return json.dumps({"lo": self.lo, "hi": self.hi})

    @staticmethod
    def from_json(text: str) -> "ExposureParams":
        try:
            obj = json.loads(text)
            return ExposureParams(float(obj["lo"]), float(obj["hi"]))
        except (KeyError, TypeError, ValueError) as e:
            raise ContractError(f"bad exposure JSON: {e}") from e


def choose_exposure(img, mask=None) -> ExposureParams:
    """(5, 95) luminance percentiles over the valid pixels.

    Luminance is the channel mean; percentiles interpolate linearly between
    order statistics.
    """
    img = np.asarray(img, dtype=np.float64)
    lum = img.mean(axis=2)
    if mask is not None:
        lum = lum[np.asarray(mask, dtype=bool)]
    if lum.size == 0:
        raise ContractError("exposure needs at least one valid pixel")
    lo, hi = np.percentile(lum, [5.0, 95.0])
    return ExposureParams(float(lo), float(hi))


def simulate_ldr(img, params: ExposureParams):
    """8-bit capture: affine into [lo, hi], quantize to 256 levels, map back.

    Degenerate brackets (hi == lo) pass the input through unchanged.
    """
    img = np.asarray(img)
    span = params.hi - params.lo
    if span == 0.0:
        return img.copy()
    t = np.clip((img.astype(np.float64) - params.lo) / span, 0.0, 1.0)
    q = np.round(t * 255.0) / 255.0
    # lo*(1-q) + hi*q hits both endpoints exactly, unlike lo + q*span
    out = params.lo * (1.0 - q) + params.hi * q
    return out.astype(img.dtype, copy=False) if img.dtype == np.float32 else out


def log_encode(img):
    """ln(x + eps); rejects negative radiance."""
    img = np.asarray(img)
    if np.any(img < 0):
        raise ContractError("log encoding requires non-negative radiance")
    return np.log(img.astype(np.float64) + LOG_EPS)


def log_decode(img):
    """Inverse of log_encode, clamped at zero."""
    return np.maximum(np.exp(np.asarray(img, dtype=np.float64)) - LOG_EPS, 0.0)


def tonemap_8bit(img, params: ExposureParams):
    """Display mapping to uint8: affine into [0, 1], gamma 1/2.2, scale to 255."""
    img = np.asarray(img, dtype=np.float64)
    span = params.hi - params.lo
    if span == 0.0:
        t = np.zeros_like(img)
    else:
        t = np.clip((img - params.lo) / span, 0.0, 1.0)
    return np.round(255.0 * t ** (1.0 / GAMMA)).astype(np.uint8)
