"""Forward synthesis of reflectance maps by discrete spherical quadrature.

A reflectance map is the orthographic image of a unit sphere: every pixel
inside the disk sees radiance leaving the sphere along the view axis from a
surface point with known normal.  Shading is diffuse-plus-specular:

    L_o(n) = kd * sum_texels L(w) * max(n . w, 0)        * dw
           + ks * sum_texels L(w) * max(r(w_o, n) . w, 0)^kg * dw

Both terms are cosine-power lobes integrated against the same lat-long
quadrature rule, so one engine serves both; the diffuse kernel is the kg = 1
case with the normal as lobe axis, the specular kernel uses the mirrored view
direction.  No energy normalization is applied to the lobe.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import ContractError, FileFormatError, NonFiniteError
from .spherical import Direction, EnvironmentMap, latlong_grid

DEFAULT_RESOLUTION = 128

# Lobe values below this contribute less than TRUNC_EPS * integral(L * dw) in
# total and are skipped; keeps pow off denormal inputs, which are an order of
# magnitude slower than the normal path.
TRUNC_EPS = 1e-12

# float32 chunk of ~64 MB keeps the dot-product buffer cache-friendly
_CHUNK_BYTES = 64 * 1024 * 1024


@dataclass(frozen=True)
class PhongMaterial:
    """Seven shading parameters: RGB diffuse, RGB specular, scalar gloss."""

    kd: tuple
    ks: tuple
    kg: float

    def __post_init__(self):
        kd = tuple(float(v) for v in self.kd)
        ks = tuple(float(v) for v in self.ks)
        if len(kd) != 3 or len(ks) != 3:
            raise ContractError("kd and ks must each have 3 channels")
        vals = kd + ks + (float(self.kg),)
        if not all(math.isfinite(v) for v in vals):
            raise NonFiniteError("material parameters must be finite")
        if any(v < 0 for v in kd) or any(v < 0 for v in ks):
            raise ContractError("reflectance coefficients must be >= 0")
        if self.kg < 1.0:
            raise ContractError(f"glossiness must be >= 1, got {self.kg}")
        object.__setattr__(self, "kd", kd)
        object.__setattr__(self, "ks", ks)

    def to_json(self) -> str:
        return json.dumps(
            {"kd": list(self.kd), "ks": list(self.ks), "kg": float(self.kg)}
        )

    @staticmethod
    def from_json(text: str) -> "PhongMaterial":
        try:
            obj = json.loads(text)
            return PhongMaterial(tuple(obj["kd"]), tuple(obj["ks"]), float(obj["kg"]))
        except (KeyError, TypeError, ValueError) as e:
            raise FileFormatError(f"bad material JSON: {e}") from e


@dataclass(frozen=True)
class ViewPose:
    """Camera orientation: azimuth about +y and declination above the xz-plane."""

    azimuth: float  # radians, from +x toward +z
    declination: float  # radians, positive lifts the camera toward +y

    def view_dir(self) -> np.ndarray:
        """World-frame unit vector from the sphere toward the camera."""
        ca, sa = math.cos(self.azimuth), math.sin(self.azimuth)
        cd, sd = math.cos(self.declination), math.sin(self.declination)
        return np.array([cd * ca, sd, cd * sa], dtype=np.float64)

    def rotation(self) -> np.ndarray:
        """3x3 camera-to-world rotation; camera +z looks back along the view ray."""
        z = self.view_dir()
        up = np.array([0.0, 1.0, 0.0])
        x = np.cross(up, z)
        nx = np.linalg.norm(x)
        if nx < 1e-12:
            raise ContractError("view direction may not be parallel to the up axis")
        x /= nx
        y = np.cross(z, x)
        return np.stack([x, y, z], axis=1)


@dataclass(frozen=True)
class ReflectanceMap:
    """Orthographic HDR sphere image plus its inside-the-disk validity mask."""

    pixels: np.ndarray  # (res, res, 3) linear radiance, zero outside the mask
    mask: np.ndarray  # (res, res) bool

    def __post_init__(self):
        p, m = self.pixels, self.mask
        if p.ndim != 3 or p.shape[2] != 3 or p.shape[0] != p.shape[1]:
            raise ContractError(f"reflectance pixels must be (res, res, 3), got {p.shape}")
        if m.shape != p.shape[:2] or m.dtype != np.bool_:
            raise ContractError("mask must be a (res, res) bool array")
        if not np.all(np.isfinite(p)):
            raise NonFiniteError("reflectance values must be finite")
        if np.any(p[~m] != 0):
            raise ContractError("masked-out pixels must be zero")
        if np.any(p[m] < 0):
            raise ContractError("reflectance values must be >= 0")
        p.flags.writeable = False
        m.flags.writeable = False

    @property
    def resolution(self) -> int:
        return self.pixels.shape[0]


def sphere_normal(x: int, y: int, resolution: int):
    """Camera-frame normal seen at pixel (x, y), or None outside the disk."""
    if not (0 <= x < resolution and 0 <= y < resolution):
        raise ContractError(f"pixel ({x}, {y}) outside {resolution}x{resolution}")
    u = 2.0 * (x + 0.5) / resolution - 1.0
    v = 1.0 - 2.0 * (y + 0.5) / resolution
    rr = u * u + v * v
    if rr > 1.0:
        return None
    return Direction(u, v, math.sqrt(1.0 - rr), "camera")


def sphere_normal_grid(resolution: int):
    """Vectorized sphere_normal: (res, res, 3) camera-frame normals and mask."""
    if resolution < 1:
        raise ContractError("resolution must be positive")
    i = np.arange(resolution, dtype=np.float64)
    u = 2.0 * (i + 0.5) / resolution - 1.0
    v = 1.0 - 2.0 * (i + 0.5) / resolution
    uu, vv = np.meshgrid(u, v)  # vv varies along rows (y), uu along columns (x)
    rr = uu * uu + vv * vv
    mask = rr <= 1.0
    n = np.zeros((resolution, resolution, 3), dtype=np.float64)
    n[:, :, 0] = uu
    n[:, :, 1] = vv
    n[:, :, 2] = np.sqrt(np.maximum(1.0 - rr, 0.0))
    n[~mask] = 0.0
    return n, mask


def reflect(d, n):
    """Mirror d about n: 2 (n . d) n - d.  Accepts Directions or arrays."""
    dv = d.as_array() if isinstance(d, Direction) else np.asarray(d, np.float64)
    nv = n.as_array() if isinstance(n, Direction) else np.asarray(n, np.float64)
    out = 2.0 * np.dot(nv, dv) * nv - dv
    if isinstance(d, Direction) or isinstance(n, Direction):
        return Direction.from_array(out, getattr(d, "frame", "world"))
    return out


def _env_quadrature(env: EnvironmentMap, dtype):
    """Texel directions (K, 3) and radiance-times-solid-angle (K, 3)."""
    dirs, wts = latlong_grid(env.height, env.width)
    lw = env.pixels.reshape(-1, 3).astype(np.float64) * wts[:, None]
    return dirs.astype(dtype, copy=False), lw.astype(dtype, copy=False)


def _lobe_quadrature(axes, env: EnvironmentMap, kg: float, dtype) -> np.ndarray:
    """Integrate L(w) * max(axis . w, 0)^kg * dw for every axis.

    axes: (M, 3) float64 unit lobe axes.  Returns (M, 3) radiance in dtype.
    The dot-product matrix is built chunk by chunk; texels below the lobe
    truncation threshold are compressed away before exponentiation.
    """
    dirs, lw = _env_quadrature(env, dtype)
    dirs_t = np.ascontiguousarray(dirs.T)
    k = dirs.shape[0]
    m = axes.shape[0]
    out = np.empty((m, 3), dtype=dtype)
    if m == 0:
        return out
    chunk = max(1, min(m, _CHUNK_BYTES // (np.dtype(dtype).itemsize * k)))
    buf = np.empty((chunk, k), dtype=dtype)
    buf2 = np.empty((chunk, k), dtype=dtype) if kg != 1.0 else None
    axes_d = axes.astype(dtype, copy=False)
    xmin = dtype(TRUNC_EPS ** (1.0 / kg)) if kg != 1.0 else None
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        b = buf[: hi - lo]
        np.dot(axes_d[lo:hi], dirs_t, out=b)
        if kg == 1.0:
            np.maximum(b, 0.0, out=b)
            np.dot(b, lw, out=out[lo:hi])
        else:
            flat = b.ravel()
            idx = np.flatnonzero(flat > xmin)
            vals = flat[idx].astype(np.float64)
            np.power(vals, kg, out=vals)
            b2 = buf2[: hi - lo]
            b2.fill(0)
            b2.ravel()[idx] = vals
            np.dot(b2, lw, out=out[lo:hi])
    return out


def _world_normals(view: ViewPose, resolution: int):
    n_cam, mask = sphere_normal_grid(resolution)
    rot = view.rotation()
    n_world = n_cam[mask] @ rot.T
    return n_world, mask


def _assemble(values, mask, resolution, dtype) -> ReflectanceMap:
    # all quadrature summands are >= 0, so no clamp is needed here; the
    # ReflectanceMap validator will flag any sign bug loudly
    pixels = np.zeros((resolution, resolution, 3), dtype=dtype)
    pixels[mask] = values
    return ReflectanceMap(pixels, mask)


def render_diffuse_rm(
    env: EnvironmentMap,
    view: ViewPose,
    resolution: int = DEFAULT_RESOLUTION,
    dtype=np.float64,
) -> ReflectanceMap:
    """Cosine-weighted irradiance map: unit-albedo diffuse shading per pixel."""
    n_world, mask = _world_normals(view, resolution)
    vals = _lobe_quadrature(n_world, env, 1.0, np.dtype(dtype).type)
    return _assemble(vals, mask, resolution, dtype)


def render_specular_rm(
    env: EnvironmentMap,
    view: ViewPose,
    kg: float,
    resolution: int = DEFAULT_RESOLUTION,
    dtype=np.float64,
) -> ReflectanceMap:
    """Phong lobe map: per pixel, the view ray mirrored about the normal
    gathers radiance with a cos^kg kernel."""
    if not (math.isfinite(kg) and kg >= 1.0):
        raise ContractError(f"glossiness must be >= 1, got {kg}")
    n_world, mask = _world_normals(view, resolution)
    w_o = view.view_dir()
    r = 2.0 * (n_world @ w_o)[:, None] * n_world - w_o
    vals = _lobe_quadrature(r, env, float(kg), np.dtype(dtype).type)
    return _assemble(vals, mask, resolution, dtype)


def render_reflectance_map(
    env: EnvironmentMap,
    material: PhongMaterial,
    view: ViewPose,
    resolution: int = DEFAULT_RESOLUTION,
    dtype=np.float64,
) -> ReflectanceMap:
    """kd * diffuse + ks * specular, channel-wise."""
    diff = render_diffuse_rm(env, view, resolution, dtype)
    spec = render_specular_rm(env, view, material.kg, resolution, dtype)
    kd = np.asarray(material.kd, dtype=dtype)
    ks = np.asarray(material.ks, dtype=dtype)
    pixels = diff.pixels * kd + spec.pixels * ks
    return ReflectanceMap(np.ascontiguousarray(pixels), diff.mask.copy())


def render_specular_levels(
    env: EnvironmentMap,
    view: ViewPose,
    levels,
    resolution: int = DEFAULT_RESOLUTION,
    dtype=np.float64,
):
    """Specular maps for many gloss levels, sharing one dot-product build.

    levels must be sorted ascending.  Returns a list of ReflectanceMaps.
    Far cheaper than repeated render_specular_rm calls because the (pixel,
    texel) cosine matrix is built once per chunk and only the exponentiation
    differs per level; ascending order makes each level's active texel set a
    subset of the previous one, so stale scatter targets shrink as we go.
    """
    levels = [float(g) for g in levels]
    if any(g < 1.0 for g in levels):
        raise ContractError("gloss levels must be >= 1")
    if any(b < a for a, b in zip(levels, levels[1:])):
        raise ContractError("gloss levels must be ascending")
    dt = np.dtype(dtype).type
    n_world, mask = _world_normals(view, resolution)
    w_o = view.view_dir()
    axes = 2.0 * (n_world @ w_o)[:, None] * n_world - w_o

    dirs, lw = _env_quadrature(env, dt)
    dirs_t = np.ascontiguousarray(dirs.T)
    k = dirs.shape[0]
    m = axes.shape[0]
    vals_out = np.empty((len(levels), m, 3), dtype=dt)
    chunk = max(1, min(m if m else 1, _CHUNK_BYTES // (np.dtype(dt).itemsize * k)))
    buf = np.empty((chunk, k), dtype=dt)
    buf2 = np.zeros((chunk, k), dtype=dt)
    axes_d = axes.astype(dt, copy=False)
    for lo in range(0, m, chunk):
        hi = min(lo + chunk, m)
        b = buf[: hi - lo]
        np.dot(axes_d[lo:hi], dirs_t, out=b)
        flat = b.ravel()
        flat2 = buf2[: hi - lo].ravel()
        prev_idx = None
        for li, kg in enumerate(levels):
            if kg == 1.0:
                c = np.maximum(b, 0.0)
                np.dot(c, lw, out=vals_out[li, lo:hi])
                continue
            xmin = dt(TRUNC_EPS ** (1.0 / kg))
            idx = np.flatnonzero(flat > xmin)
            vals = flat[idx].astype(np.float64)
            np.power(vals, kg, out=vals)
            if prev_idx is not None:
                flat2[prev_idx] = 0
            flat2[idx] = vals
            prev_idx = idx
            np.dot(buf2[: hi - lo], lw, out=vals_out[li, lo:hi])
        if prev_idx is not None:
            flat2[prev_idx] = 0
    return [_assemble(vals_out[li], mask, resolution, dt) for li in range(len(levels))]


def point_light_env(
    d,
    total_flux: float,
    radius: float,
    width: int = DEFAULT_RESOLUTION,
    height: int = DEFAULT_RESOLUTION,
) -> EnvironmentMap:
    """A constant-radiance cap of the given angular radius, normalized so the
    radiance-times-solid-angle total equals total_flux exactly."""
    dv = d.as_array() if isinstance(d, Direction) else np.asarray(d, np.float64)
    if abs(np.linalg.norm(dv) - 1.0) > 1e-6:
        raise ContractError("light direction must be unit length")
    if radius < math.pi / height:
        raise ContractError(
            f"cap radius {radius} is below the texel angular size {math.pi / height:.4g}"
        )
    if total_flux < 0 or not math.isfinite(total_flux):
        raise ContractError("total flux must be finite and >= 0")
    dirs, wts = latlong_grid(height, width)
    cos_t = dirs @ dv
    sel = cos_t >= math.cos(radius)
    if not np.any(sel):  # cap slipped between texel centers; keep the nearest
        sel = np.zeros(len(cos_t), dtype=bool)
        sel[int(np.argmax(cos_t))] = True
    area = float(wts[sel].sum())
    pixels = np.zeros((height * width, 3), dtype=np.float64)
    pixels[sel] = total_flux / area
    return EnvironmentMap(pixels.reshape(height, width, 3))
