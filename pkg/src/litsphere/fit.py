"""Closed-form Phong estimation from a reflectance map under known lighting.

Shading is linear in the diffuse and specular coefficients once glossiness is
fixed, so the fit is a line search over a discrete gloss grid: at each level a
damped 2x2 least-squares problem per channel recovers (kd, ks), and the level
with the smallest total residual wins.  Negative solutions are clamped to the
axes and re-solved, which for two variables is exactly the active-set optimum.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ContractError, FileFormatError
from .render import (
    PhongMaterial,
    ReflectanceMap,
    ViewPose,
    render_diffuse_rm,
    render_specular_levels,
    sphere_normal_grid,
)
from .spherical import EnvironmentMap, load_pfm, save_pfm

DAMPING = 1e-9  # Tikhonov factor, scaled by the trace of the normal matrix


@dataclass(frozen=True)
class GlossGrid:
    """Log-spaced glossiness levels searched by the fitter."""

    levels: np.ndarray

    def __post_init__(self):
        lv = np.asarray(self.levels, dtype=np.float64)
        if lv.ndim != 1 or lv.size < 1:
            raise ContractError("gloss grid must be a non-empty 1-d array")
        if lv[0] < 1.0 or np.any(np.diff(lv) <= 0):
            raise ContractError("gloss levels must be >= 1 and strictly increasing")
        lv.flags.writeable = False
        object.__setattr__(self, "levels", lv)

    @staticmethod
    def make(k_min: float = 1.0, k_max: float = 1024.0, count: int = 100) -> "GlossGrid":
        if not (1.0 <= k_min < k_max) or count < 2:
            raise ContractError("need 1 <= k_min < k_max and count >= 2")
        return GlossGrid(np.geomspace(k_min, k_max, count))


@dataclass(frozen=True)
class BasisRMs:
    """Diffuse map plus one specular map per gloss level, all sharing a mask."""

    diffuse: ReflectanceMap
    specular: tuple
    grid: GlossGrid
    env_id: str = ""
    view: ViewPose | None = None

    def __post_init__(self):
        if len(self.specular) != self.grid.levels.size:
            raise ContractError("one specular map per gloss level required")
        for s in self.specular:
            if s.resolution != self.diffuse.resolution or not np.array_equal(
                s.mask, self.diffuse.mask
            ):
                raise ContractError("basis maps must share resolution and mask")
        object.__setattr__(self, "specular", tuple(self.specular))


def precompute_basis(
    env: EnvironmentMap,
    view: ViewPose,
    grid: GlossGrid,
    resolution: int = 128,
    dtype=np.float64,
    env_id: str = "",
) -> BasisRMs:
    """Render the diffuse map and every gloss level over one (env, view)."""
    diffuse = render_diffuse_rm(env, view, resolution, dtype)
    specular = render_specular_levels(env, view, grid.levels, resolution, dtype)
    return BasisRMs(diffuse, tuple(specular), grid, env_id, view)


def _residual(kd, ks, l_d, l_s, l_o) -> float:
    r = kd * l_d + ks * l_s - l_o
    return float(r @ r)


def solve_kd_ks(l_o, l_d, l_s):
    """Non-negative damped least squares for one channel's coefficients.

    Returns (kd, ks, residual) where residual is the true sum of squares of
    the returned coefficients, not the normal-equation shortcut.
    """
    l_o = np.asarray(l_o, dtype=np.float64).ravel()
    l_d = np.asarray(l_d, dtype=np.float64).ravel()
    l_s = np.asarray(l_s, dtype=np.float64).ravel()
    if not (l_o.size == l_d.size == l_s.size):
        raise ContractError("solve_kd_ks needs equally sized vectors")
    if l_o.size < 2:
        raise ContractError("solve_kd_ks needs at least 2 samples")
    dd = float(l_d @ l_d)
    ss = float(l_s @ l_s)
    ds = float(l_d @ l_s)
    do = float(l_d @ l_o)
    so = float(l_s @ l_o)
    lam = DAMPING * (dd + ss)
    a = dd + lam
    c = ss + lam
    det = a * c - ds * ds
    if det > 0.0:
        kd = (c * do - ds * so) / det
        ks = (a * so - ds * do) / det
        if kd >= 0.0 and ks >= 0.0:
            return kd, ks, _residual(kd, ks, l_d, l_s, l_o)
    # clamp the negative coefficient and re-solve the remaining 1-d problem
    kd1 = max(0.0, do / (dd + DAMPING * dd)) if dd > 0 else 0.0
    ks1 = max(0.0, so / (ss + DAMPING * ss)) if ss > 0 else 0.0
    r_d = _residual(kd1, 0.0, l_d, l_s, l_o)
    r_s = _residual(0.0, ks1, l_d, l_s, l_o)
    if r_d <= r_s:
        return kd1, 0.0, r_d
    return 0.0, ks1, r_s


def fit_phong(rm: ReflectanceMap, basis: BasisRMs):
    """Line search over the gloss grid; per channel 2x2 solves at each level.

    Ties in the total residual break toward the lower gloss level.
    """
    if not np.array_equal(rm.mask, basis.diffuse.mask):
        raise ContractError("reflectance map mask does not match basis mask")
    mask = rm.mask
    o = rm.pixels[mask].astype(np.float64)
    d = basis.diffuse.pixels[mask].astype(np.float64)
    best = None
    for li in range(basis.grid.levels.size):
        s = basis.specular[li].pixels[mask].astype(np.float64)
        total = 0.0
        coefs = []
        for ch in range(3):
            kd, ks, res = solve_kd_ks(o[:, ch], d[:, ch], s[:, ch])
            total += res
            coefs.append((kd, ks))
        if best is None or total < best[0]:
            best = (total, li, coefs)
    _, li, coefs = best
    return PhongMaterial(
        tuple(kd for kd, _ in coefs),
        tuple(ks for _, ks in coefs),
        float(basis.grid.levels[li]),
    )


# ---------------------------------------------------------------------------
# basis cache: a directory of PFMs plus a JSON index


def save_basis(basis: BasisRMs, directory) -> None:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    save_pfm(basis.diffuse.pixels.astype(np.float32), d / "diffuse.pfm")
    for i, s in enumerate(basis.specular):
        save_pfm(s.pixels.astype(np.float32), d / f"specular_{i:03d}.pfm")
    index = {
        "v": 1,
        "resolution": basis.diffuse.resolution,
        "levels": [float(g) for g in basis.grid.levels],
        "env_id": basis.env_id,
        "view": None
        if basis.view is None
        else {"azimuth": basis.view.azimuth, "declination": basis.view.declination},
    }
    (d / "index.json").write_text(json.dumps(index, indent=1))


def load_basis(directory) -> BasisRMs:
    d = Path(directory)
    try:
        index = json.loads((d / "index.json").read_text())
        res = int(index["resolution"])
        levels = index["levels"]
        view = index.get("view")
    except (OSError, ValueError, KeyError) as e:
        raise FileFormatError(f"unreadable basis index in {d}: {e}") from e
    mask = sphere_normal_grid(res)[1]

    def read_map(name):
        pix = load_pfm(d / name)
        if pix.shape[0] != res or pix.shape[1] != res:
            raise FileFormatError(f"basis map {name} has wrong resolution")
        pix = pix.copy()
        pix[~mask] = 0  # float32 dust outside the disk is not data
        return ReflectanceMap(pix, mask.copy())

    diffuse = read_map("diffuse.pfm")
    specular = tuple(read_map(f"specular_{i:03d}.pfm") for i in range(len(levels)))
    vp = None if view is None else ViewPose(float(view["azimuth"]), float(view["declination"]))
    return BasisRMs(diffuse, specular, GlossGrid(np.asarray(levels)), index.get("env_id", ""), vp)
