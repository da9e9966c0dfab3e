"""Directions, the lat-long sphere parametrization, solid angles, and PFM I/O.

Conventions used everywhere in this package:

* world frame is right-handed with +y up; azimuth is measured from +x toward +z
* an environment map row indexes polar angle theta in [0, pi] top to bottom,
  a column indexes azimuth phi in [0, 2*pi) left to right
* texels are sampled at their centers: theta = pi*(row+0.5)/height,
  phi = 2*pi*(col+0.5)/width
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractError, NonFiniteError, PfmHeaderError, PfmTruncatedError

UNIT_TOL = 1e-6  # slack allowed when validating caller-supplied directions


@dataclass(frozen=True)
class Direction:
    """A unit 3-vector tagged with the frame it lives in."""

    x: float
    y: float
    z: float
    frame: str = "world"

    def __post_init__(self):
        n = math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)
        if not math.isfinite(n) or abs(n - 1.0) > UNIT_TOL:
            raise ContractError(f"direction must be unit length, got |d| = {n!r}")
        if self.frame not in ("world", "camera"):
            raise ContractError(f"unknown frame {self.frame!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)

    @staticmethod
    def from_array(a, frame: str = "world") -> "Direction":
        a = np.asarray(a, dtype=np.float64)
        n = float(np.linalg.norm(a))
        if n == 0.0 or not math.isfinite(n):
            raise ContractError("cannot normalize a zero or non-finite vector")
        return Direction(a[0] / n, a[1] / n, a[2] / n, frame)


@dataclass(frozen=True)
class EnvironmentMap:
    """HDR spherical radiance stored as a lat-long image, 3 channels."""

    pixels: np.ndarray  # (height, width, 3), linear radiance

    def __post_init__(self):
        p = self.pixels
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ContractError(f"environment pixels must be (h, w, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise NonFiniteError("environment radiance must be finite")
        if np.any(p < 0):
            raise ContractError("environment radiance must be >= 0")
        p.flags.writeable = False

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class SolidAngleTable:
    """Per-row texel solid angles for a lat-long grid; constant along a row."""

    height: int
    width: int
    row_weights: np.ndarray = field(repr=False)  # (height,), steradians per texel

    def total(self) -> float:
        return float(self.row_weights.sum() * self.width)


def _check_index(name, value, bound):
    if not 0 <= value < bound:
        raise ContractError(f"{name} = {value} outside [0, {bound})")


def latlong_to_direction(row: int, col: int, height: int, width: int) -> Direction:
    """Unit world direction at the center of texel (row, col)."""
    _check_index("row", row, height)
    _check_index("col", col, width)
    theta = math.pi * (row + 0.5) / height
    phi = 2.0 * math.pi * (col + 0.5) / width
    st = math.sin(theta)
    return Direction(st * math.cos(phi), math.cos(theta), st * math.sin(phi), "world")


def direction_to_latlong(d, height: int, width: int) -> tuple[float, float]:
    """Continuous (row, col) of a world direction; inverse of the texel-center map.

    The returned column lies in [-0.5, width - 0.5); directions between the
    last and first column centers map to negative fractional columns.
    """
    a = d.as_array() if isinstance(d, Direction) else np.asarray(d, dtype=np.float64)
    n = float(np.linalg.norm(a))
    if abs(n - 1.0) > UNIT_TOL:
        raise ContractError(f"direction must be unit length, got |d| = {n!r}")
    theta = math.acos(min(1.0, max(-1.0, float(a[1]))))
    phi = math.atan2(float(a[2]), float(a[0]))
    if phi < 0.0:
        phi += 2.0 * math.pi
    row = theta * height / math.pi - 0.5
    col = phi * width / (2.0 * math.pi) - 0.5
    if col >= width - 0.5:  # guard the phi ~ 2*pi rounding edge
        col -= width
    return row, col


def texel_solid_angle(row: int, height: int, width: int) -> float:
    """Solid angle of one texel in the given row, in steradians.

    Uses the exact band integral (2*pi/width) * (cos(theta_top) - cos(theta_bottom)),
    which telescopes to a total of exactly 4*pi over the sphere.  It equals the
    midpoint form (2*pi/width)*(pi/height)*sin(theta_center) times the global
    constant sinc(pi/(2*height)).
    """
    _check_index("row", row, height)
    t0 = math.pi * row / height
    t1 = math.pi * (row + 1) / height
    return (2.0 * math.pi / width) * (math.cos(t0) - math.cos(t1))


def solid_angle_table(height: int, width: int) -> SolidAngleTable:
    if height < 1 or width < 1:
        raise ContractError("solid angle table needs positive dimensions")
    edges = np.cos(np.pi * np.arange(height + 1, dtype=np.float64) / height)
    w = (2.0 * np.pi / width) * (edges[:-1] - edges[1:])
    w.flags.writeable = False
    return SolidAngleTable(height, width, w)


def latlong_grid(height: int, width: int):
    """All texel-center directions and weights at once.

    Returns (dirs, weights): dirs is (height*width, 3) float64 in row-major
    texel order, weights is (height*width,) steradians.  This is the quadrature
    rule every renderer in the package integrates against.
    """
    rows = (np.arange(height, dtype=np.float64) + 0.5) * (np.pi / height)
    cols = (np.arange(width, dtype=np.float64) + 0.5) * (2.0 * np.pi / width)
    st, ct = np.sin(rows), np.cos(rows)
    cp, sp = np.cos(cols), np.sin(cols)
    dirs = np.empty((height, width, 3), dtype=np.float64)
    dirs[:, :, 0] = st[:, None] * cp[None, :]
    dirs[:, :, 1] = ct[:, None]
    dirs[:, :, 2] = st[:, None] * sp[None, :]
    weights = np.repeat(solid_angle_table(height, width).row_weights, width)
    return dirs.reshape(-1, 3), weights


# ---------------------------------------------------------------------------
# PFM I/O
#
# Layout: line "PF", line "<width> <height>", line "<scale>" (negative scale
# means little-endian payload), then rows of width*3 float32, bottom row first.


def _read_token(f) -> bytes:
    tok = b""
    while True:
        c = f.read(1)
        if c == b"":
            raise PfmHeaderError("unexpected end of file in PFM header")
        if c.isspace():
            if tok:
                return tok
            continue
        tok += c


def load_pfm(path) -> np.ndarray:
    """Read a 3-channel PFM file into a (height, width, 3) float32 array."""
    with open(path, "rb") as f:
        magic = _read_token(f)
        if magic == b"Pf":
            raise PfmHeaderError("grayscale PFM (Pf) not supported, need color PF")
        if magic != b"PF":
            raise PfmHeaderError(f"bad PFM magic {magic!r}")
        try:
            width = int(_read_token(f))
            height = int(_read_token(f))
            scale = float(_read_token(f))
        except ValueError as e:
            raise PfmHeaderError(f"malformed PFM header: {e}") from e
        if width <= 0 or height <= 0:
            raise PfmHeaderError(f"bad PFM dimensions {width}x{height}")
        if scale == 0.0 or not math.isfinite(scale):
            raise PfmHeaderError(f"bad PFM scale {scale!r}")
        count = width * height * 3
        raw = f.read(count * 4)
    if len(raw) < count * 4:
        raise PfmTruncatedError(
            f"PFM payload has {len(raw)} bytes, expected {count * 4}"
        )
    dt = "<f4" if scale < 0 else ">f4"
    data = np.frombuffer(raw, dtype=dt, count=count).astype(np.float32, copy=True)
    img = data.reshape(height, width, 3)
    return img[::-1].copy()  # stored bottom-up


def save_pfm(image, path) -> None:
    """Write a (height, width, 3) float32 image as little-endian PFM."""
    img = np.asarray(image)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ContractError(f"PFM image must be (h, w, 3), got {img.shape}")
    if not np.all(np.isfinite(img)):
        raise NonFiniteError("refusing to save non-finite values to PFM")
    img32 = np.ascontiguousarray(img[::-1], dtype="<f4")
    header = f"PF\n{img.shape[1]} {img.shape[0]}\n-1.0\n".encode("ascii")
    Path(path).write_bytes(header + img32.tobytes())


def resample_envmap(src: EnvironmentMap, width: int, height: int) -> EnvironmentMap:
    """Bilinear resample in lat-long coordinates with azimuthal wraparound."""
    if width < 1 or height < 1:
        raise ContractError("target size must be positive")
    sh, sw = src.height, src.width
    p = src.pixels.astype(np.float64, copy=False)

    # continuous source coordinates of each target texel center
    r = (np.arange(height, dtype=np.float64) + 0.5) * (sh / height) - 0.5
    c = (np.arange(width, dtype=np.float64) + 0.5) * (sw / width) - 0.5

    r0 = np.clip(np.floor(r), 0, sh - 1).astype(np.int64)
    r1 = np.minimum(r0 + 1, sh - 1)
    tr = np.clip(r - r0, 0.0, 1.0)

    c_wrapped = np.mod(c, sw)
    c0 = np.floor(c_wrapped).astype(np.int64) % sw
    c1 = (c0 + 1) % sw
    tc = c_wrapped - np.floor(c_wrapped)

    # lerp as a + t*(b - a) so constants and aligned grids reproduce exactly
    top = p[r0[:, None], c0[None, :]]
    top = top + tc[None, :, None] * (p[r0[:, None], c1[None, :]] - top)
    bot = p[r1[:, None], c0[None, :]]
    bot = bot + tc[None, :, None] * (p[r1[:, None], c1[None, :]] - bot)
    out = top + tr[:, None, None] * (bot - top)
    return EnvironmentMap(np.ascontiguousarray(out, dtype=src.pixels.dtype))
