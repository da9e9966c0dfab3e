"""Guided 2x upsampling of estimated illumination maps.

A 64x64 illumination estimate is upgraded to 128x128 with a joint
bilateral filter whose range term reads from the reflectance map.  The RM
lives on sphere normals and the illumination on light directions, so the
guide is pulled back through the half-vector: the lat-long texel pointing
along omega is guided by the RM pixel whose normal mirrors omega toward
the viewer.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import ContractError, NonFiniteError
from .render import ReflectanceMap, ViewPose
from .spherical import EnvironmentMap, latlong_grid

SIGMA_S = 0.75
# Range sigma as a fraction of the 95th-percentile guide luminance.
SIGMA_R_FRACTION = 0.1

_WINDOW = 2  # 5x5 low-res support covers +-2 sigma_s at the default


@dataclass(frozen=True)
class GuideImage:
    """Reflectance pulled back onto the lat-long grid, with a validity bit."""

    pixels: np.ndarray  # (h, w, 3), zero wherever confidence is False
    confidence: np.ndarray  # (h, w) bool

    def __post_init__(self):
        p, c = self.pixels, self.confidence
        if p.ndim != 3 or p.shape[2] != 3:
            raise ContractError(f"guide pixels must be (h, w, 3), got {p.shape}")
        if c.shape != p.shape[:2] or c.dtype != np.bool_:
            raise ContractError("confidence must be an (h, w) bool array")
        if not np.all(np.isfinite(p)):
            raise NonFiniteError("guide values must be finite")
        if np.any(p[~c] != 0):
            raise ContractError("unconfident guide pixels must be zero")
        p.flags.writeable = False
        c.flags.writeable = False

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


def _sample_rm(rm: ReflectanceMap, nx, ny):
    """Bilinear RM lookup at the pixels whose normals project to (nx, ny).

    Footprint corners outside the valid disk carry zero weight and the rest
    are renormalized, so a constant RM stays constant right up to the rim.
    Returns (values, ok); ok is False where no valid corner remains.
    """
    res = rm.resolution
    x = (nx + 1.0) * (res / 2.0) - 0.5
    y = (1.0 - ny) * (res / 2.0) - 0.5
    x0 = np.floor(x).astype(np.int64)
    y0 = np.floor(y).astype(np.int64)
    fx, fy = x - x0, y - y0
    vals = np.zeros(nx.shape + (3,), dtype=np.float64)
    wtot = np.zeros(nx.shape, dtype=np.float64)
    for dy in (0, 1):
        wy = fy if dy else 1.0 - fy
        for dx in (0, 1):
            cx, cy = x0 + dx, y0 + dy
            inside = (cx >= 0) & (cx < res) & (cy >= 0) & (cy < res)
            cx, cy = np.clip(cx, 0, res - 1), np.clip(cy, 0, res - 1)
            w = (fx if dx else 1.0 - fx) * wy * inside * rm.mask[cy, cx]
            vals += w[..., None] * rm.pixels[cy, cx]
            wtot += w
    ok = wtot > 1e-12
    vals[ok] /= wtot[ok, None]
    vals[~ok] = 0.0
    return vals, ok


def build_guide(
    rm: ReflectanceMap, view: ViewPose, width: int = 128, height: int = 128
) -> GuideImage:
    """Pull the RM back onto the illumination domain through the half-vector.

    Each lat-long direction omega gets the RM value at the normal
    h = normalize(omega + omega_o), the normal that mirrors omega toward
    the camera.  Confidence drops to zero where h degenerates (omega
    opposite the view), faces away from the camera, or lands outside the
    sphere silhouette.
    """
    if width < 1 or height < 1:
        raise ContractError("guide dimensions must be positive")
    dirs, _ = latlong_grid(height, width)
    half = dirs + view.view_dir()[None, :]
    norm = np.linalg.norm(half, axis=1)
    ok = norm > 1e-9  # omega == -omega_o has no half-vector
    half[ok] /= norm[ok, None]
    h_cam = half @ view.rotation()  # world -> camera: rows times R equals R^T h
    front = ok & (h_cam[:, 2] > 0.0)
    vals, hit = _sample_rm(rm, h_cam[:, 0], h_cam[:, 1])
    conf = front & hit
    vals[~conf] = 0.0
    return GuideImage(vals.reshape(height, width, 3), conf.reshape(height, width))


def joint_bilateral_upsample(
    low: EnvironmentMap,
    guide: GuideImage,
    sigma_s: float = SIGMA_S,
    sigma_r: Optional[float] = None,
) -> EnvironmentMap:
    """Upsample a 64x64 illumination map to 128x128 under a guide image.

    Each output texel is a convex combination of the 5x5 low-res
    neighborhood around its projection, weighted by a spatial Gaussian
    (sigma_s, low-res pixel units) times a range Gaussian on guide
    luminance (sigma_r).  Where the guide has zero confidence the range
    term is dropped and the filter falls back to pure spatial smoothing.
    sigma_r defaults to SIGMA_R_FRACTION of the 95th-percentile guide
    luminance, floored to stay positive for an all-black guide.
    """
    lh, lw = low.height, low.width
    if (lh, lw) != (64, 64):
        raise ContractError(f"low-res map must be 64x64, got {lh}x{lw}")
    if (guide.height, guide.width) != (2 * lh, 2 * lw):
        raise ContractError(
            f"guide must be {2 * lh}x{2 * lw}, got {guide.height}x{guide.width}"
        )
    if not sigma_s > 0.0:
        raise ContractError("sigma_s must be positive")
    g_lum = guide.pixels.mean(axis=2)
    if sigma_r is None:
        sigma_r = max(SIGMA_R_FRACTION * float(np.percentile(g_lum, 95)), 1e-6)
    if not sigma_r > 0.0:
        raise ContractError("sigma_r must be positive")
    # Plain 2x2 mean puts the guide on the low-res grid for the range term.
    g_down = g_lum.reshape(lh, 2, lw, 2).mean(axis=(1, 3))

    cy = np.arange(2 * lh) // 2  # nearest low-res row per output row
    cx = np.arange(2 * lw) // 2
    ry = (np.arange(2 * lh) % 2) * 0.5 - 0.25  # projection offset from it
    rx = (np.arange(2 * lw) % 2) * 0.5 - 0.25
    inv2s = 1.0 / (2.0 * sigma_s * sigma_s)
    inv2r = 1.0 / (2.0 * sigma_r * sigma_r)
    conf = guide.confidence
    center = low.pixels[np.ix_(cy, cx)]
    num = np.zeros_like(center)
    wsum = np.zeros((2 * lh, 2 * lw), dtype=np.float64)
    for dy in range(-_WINDOW, _WINDOW + 1):
        rows = np.clip(cy + dy, 0, lh - 1)  # rows clamp at the poles
        wy = np.exp(-((ry - dy) ** 2) * inv2s)
        for dx in range(-_WINDOW, _WINDOW + 1):
            cols = (cx + dx) % lw  # azimuth wraps
            wx = np.exp(-((rx - dx) ** 2) * inv2s)
            w_r = np.exp(-((g_lum - g_down[np.ix_(rows, cols)]) ** 2) * inv2r)
            w = wy[:, None] * wx[None, :] * np.where(conf, w_r, 1.0)
            num += w[:, :, None] * (low.pixels[np.ix_(rows, cols)] - center)
            wsum += w
    # Residual form: constants survive bitwise, and a fully underflowed
    # window degrades to the nearest low-res texel instead of 0/0.
    out = center + num / np.where(wsum > 0.0, wsum, 1.0)[:, :, None]
    return EnvironmentMap(np.maximum(out, 0.0))
