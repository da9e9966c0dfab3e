"""Re-synthesis benchmark: decompose, manipulate, re-render, compare.

Five manipulation tasks probe a decomposition from different angles: a
point light or a novel illumination isolates the material estimate, a
mirror material or a novel material isolates the illumination estimate,
and plain re-synthesis checks the pair jointly.  Decomposition providers
plug in ground truth, a greedy fit, or externally produced files.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from .dataset import SampleRecord, load_manifest, sample_view
from .errors import ContractError
from .exposure import choose_exposure, log_decode, tonemap_8bit
from .fit import GlossGrid, fit_phong, precompute_basis
from .metrics import MetricPair, dssim, mse_log
from .render import (
    PhongMaterial,
    ReflectanceMap,
    ViewPose,
    point_light_env,
    render_reflectance_map,
    sphere_normal_grid,
)
from .spherical import EnvironmentMap, load_pfm, resample_envmap
from .upsample import build_guide, joint_bilateral_upsample

TASKS = ("PointLight", "MirrorMat", "Resynth", "MerlMat", "NatIllum")
PROVENANCE_TAGS = ("ground-truth", "greedy", "external-files")
# Ideal mirror inside the Phong family: no body color, full gloss.
MIRROR_MATERIAL = PhongMaterial((0.0, 0.0, 0.0), (1.0, 1.0, 1.0), 1024.0)
POINT_LIGHT_RADIUS = math.radians(5.0)
POINT_LIGHT_FLUX = 1.0  # white diffuse sphere peaks near 1
_ENV_TARGET = 128


@dataclass(frozen=True)
class Decomposition:
    """One provider answer: a material plus an illumination estimate."""

    material: PhongMaterial
    env: EnvironmentMap
    tag: str

    def __post_init__(self):
        h, w = self.env.height, self.env.width
        if h != w or h not in (64, 128):
            raise ContractError(f"decomposition env must be 64x64 or 128x128, got {h}x{w}")
        if self.tag not in PROVENANCE_TAGS:
            raise ContractError(f"unknown provenance tag {self.tag!r}")


@dataclass(frozen=True)
class AuxCorpora:
    """Swap pools for the novel-material and novel-illumination tasks."""

    materials: Tuple[PhongMaterial, ...]
    envs: Tuple[EnvironmentMap, ...]


@dataclass(frozen=True)
class SampleData:
    """Everything a provider may look at for one benchmark sample."""

    record: SampleRecord
    rm: ReflectanceMap
    env: EnvironmentMap
    view: ViewPose


@dataclass(frozen=True)
class TaskStats:
    mse: float
    dssim: float
    count: int


@dataclass(frozen=True)
class BenchReport:
    rows: Dict[str, TaskStats]
    samples: int  # test samples in the corpus
    errors: int  # provider failures, skipped but never dropped silently


@dataclass(frozen=True)
class BenchConfig:
    resolution: int = 128
    variants: int = 50
    seed: int = 0
    env_upgrade: str = "guided"  # or "bilinear"
    mirror_lookup: bool = False
    tasks: Tuple[str, ...] = TASKS

    def __post_init__(self):
        if self.resolution < 32:  # DSSIM needs room for its dyadic scales
            raise ContractError("benchmark resolution must be at least 32")
        if self.variants < 1:
            raise ContractError("variants must be positive")
        if self.env_upgrade not in ("guided", "bilinear"):
            raise ContractError(f"unknown env upgrade mode {self.env_upgrade!r}")
        if not self.tasks or any(t not in TASKS for t in self.tasks):
            raise ContractError(f"tasks must be a nonempty subset of {TASKS}")


def load_sample_data(record: SampleRecord, base_dir) -> SampleData:
    """Decode one sample's stored RM and illumination for providers."""
    base = Path(base_dir)
    px = log_decode(load_pfm(base / record.rm_hdr))
    mask = sphere_normal_grid(px.shape[0])[1]
    px[~mask] = 0.0  # decode dust: log_encode(0) does not survive f32 exactly
    rm = ReflectanceMap(px, mask)
    env = EnvironmentMap(load_pfm(base / record.env))
    return SampleData(record, rm, env, record.view)


def ground_truth_provider(sd: SampleData) -> Decomposition:
    return Decomposition(sd.record.material, sd.env, "ground-truth")


def make_greedy_provider(
    env_dir=None, grid: Optional[GlossGrid] = None
) -> Callable[[SampleData], Decomposition]:
    """Fit the material against a known env (external `<id>.env.pfm` files,
    or the sample's own map when env_dir is None)."""
    g = grid if grid is not None else GlossGrid.make()

    def provider(sd: SampleData) -> Decomposition:
        if env_dir is None:
            env = sd.env
        else:
            env = EnvironmentMap(load_pfm(Path(env_dir) / f"{sd.record.id}.env.pfm"))
        basis = precompute_basis(env, sd.view, g, resolution=sd.rm.resolution)
        return Decomposition(fit_phong(sd.rm, basis), env, "greedy")

    return provider


def make_external_provider(dir_path) -> Callable[[SampleData], Decomposition]:
    """Read `<id>.material.json` + `<id>.env.pfm` produced by another system."""
    d = Path(dir_path)

    def provider(sd: SampleData) -> Decomposition:
        material = PhongMaterial.from_json((d / f"{sd.record.id}.material.json").read_text())
        env = EnvironmentMap(load_pfm(d / f"{sd.record.id}.env.pfm"))
        return Decomposition(material, env, "external-files")

    return provider


def upgrade_env(dec: Decomposition, sd: SampleData, mode: str) -> Decomposition:
    """Bring a 64x64 estimate to rendering resolution, guided by the RM."""
    if dec.env.height == _ENV_TARGET:
        return dec
    if mode == "guided":
        guide = build_guide(sd.rm, sd.view, _ENV_TARGET, _ENV_TARGET)
        env = joint_bilateral_upsample(dec.env, guide)
    elif mode == "bilinear":
        env = resample_envmap(dec.env, _ENV_TARGET, _ENV_TARGET)
    else:
        raise ContractError(f"unknown env upgrade mode {mode!r}")
    return Decomposition(dec.material, env, dec.tag)


def _random_unit(rng) -> np.ndarray:
    while True:
        v = rng.normal(size=3)
        n = np.linalg.norm(v)
        if n > 1e-9:
            return v / n


def _mirror_lookup_rm(env: EnvironmentMap, view: ViewPose, resolution: int) -> ReflectanceMap:
    """Exact mirror: bilinear env lookup along each reflected view ray."""
    n_cam, mask = sphere_normal_grid(resolution)
    w_o = view.view_dir()
    n_w = n_cam.reshape(-1, 3)[mask.reshape(-1)] @ view.rotation().T
    r = 2.0 * (n_w @ w_o)[:, None] * n_w - w_o
    sh, sw = env.height, env.width
    p = env.pixels.astype(np.float64, copy=False)
    theta = np.arccos(np.clip(r[:, 1], -1.0, 1.0))
    phi = np.mod(np.arctan2(r[:, 2], r[:, 0]), 2.0 * np.pi)
    row = theta * sh / np.pi - 0.5
    col = phi * sw / (2.0 * np.pi) - 0.5
    r0 = np.clip(np.floor(row), 0, sh - 1).astype(np.int64)
    r1 = np.minimum(r0 + 1, sh - 1)
    tr = np.clip(row - r0, 0.0, 1.0)
    cw = np.mod(col, sw)
    c0 = np.floor(cw).astype(np.int64) % sw
    c1 = (c0 + 1) % sw
    tc = (cw - np.floor(cw))[:, None]
    top = p[r0, c0]
    top = top + tc * (p[r0, c1] - top)
    bot = p[r1, c0]
    bot = bot + tc * (p[r1, c1] - bot)
    vals = top + tr[:, None] * (bot - top)
    out = np.zeros((resolution, resolution, 3))
    out[mask] = vals
    return ReflectanceMap(out, mask)


def _pair_metrics(est_rm: ReflectanceMap, ref_rm: ReflectanceMap) -> Tuple[float, float]:
    m = mse_log(est_rm.pixels, ref_rm.pixels, ref_rm.mask)
    params = choose_exposure(ref_rm.pixels, ref_rm.mask)
    d = dssim(tonemap_8bit(est_rm.pixels, params), tonemap_8bit(ref_rm.pixels, params))
    return m, d


def run_task(
    task: str,
    est: Decomposition,
    ref: Decomposition,
    aux: AuxCorpora,
    rng,
    variants: int = 50,
    *,
    resolution: int = 128,
    mirror_lookup: bool = False,
) -> MetricPair:
    """Render one manipulated pair (averaged over variants) and score it.

    The re-synthesis view is drawn once per call and shared by both sides
    and all variants; swap tasks re-draw only the substituted component.
    """
    if task not in TASKS:
        raise ContractError(f"unknown task {task!r}")
    if variants < 1:
        raise ContractError("variants must be positive")
    if resolution < 32:
        raise ContractError("task resolution must be at least 32")
    view = sample_view(rng)

    def render(material, env):
        return render_reflectance_map(env, material, view, resolution, dtype=np.float32)

    pairs = []
    if task == "PointLight":
        env = point_light_env(
            _random_unit(rng), POINT_LIGHT_FLUX, POINT_LIGHT_RADIUS, _ENV_TARGET, _ENV_TARGET
        )
        pairs.append((est.material, env, ref.material, env))
    elif task == "MirrorMat":
        if mirror_lookup:
            vals = [_pair_metrics(_mirror_lookup_rm(est.env, view, resolution),
                                  _mirror_lookup_rm(ref.env, view, resolution))]
            return MetricPair(*[float(np.mean(v)) for v in zip(*vals)])
        pairs.append((MIRROR_MATERIAL, est.env, MIRROR_MATERIAL, ref.env))
    elif task == "Resynth":
        pairs.append((est.material, est.env, ref.material, ref.env))
    elif task == "MerlMat":
        if not aux.materials:
            raise ContractError("MerlMat needs a nonempty aux material corpus")
        for _ in range(variants):
            m = aux.materials[int(rng.integers(len(aux.materials)))]
            pairs.append((m, est.env, m, ref.env))
    else:  # NatIllum
        if not aux.envs:
            raise ContractError("NatIllum needs a nonempty aux illumination corpus")
        for _ in range(variants):
            e = aux.envs[int(rng.integers(len(aux.envs)))]
            pairs.append((est.material, e, ref.material, e))

    vals = [_pair_metrics(render(m1, e1), render(m2, e2)) for m1, e1, m2, e2 in pairs]
    mses, dssims = zip(*vals)
    return MetricPair(float(np.mean(mses)), float(np.mean(dssims)))


def run_benchmark(
    manifest_path, provider: Callable[[SampleData], Decomposition],
    config: BenchConfig = BenchConfig(),
) -> BenchReport:
    """Score a provider over every test-split sample and all configured tasks.

    Aux swap pools come from the train split (its distinct materials and
    illuminations), so substituted components are never part of the scored
    sample.  Per-sample rng streams are keyed by record id: aggregation is
    independent of processing order and of test-set composition.
    """
    manifest_path = Path(manifest_path)
    base = manifest_path.parent
    records = load_manifest(manifest_path)
    test_recs = [r for r in records if r.split == "test"]
    if not test_recs:
        raise ContractError("manifest contains no test-split samples")
    train_recs = [r for r in records if r.split == "train"]
    materials = tuple(dict.fromkeys(r.material for r in train_recs))
    env_paths = dict.fromkeys((r.env_id, r.env) for r in train_recs)
    envs = tuple(EnvironmentMap(load_pfm(base / rel)) for _, rel in env_paths)
    aux = AuxCorpora(materials, envs)
    if "MerlMat" in config.tasks and not materials:
        raise ContractError("MerlMat task needs train-split materials")
    if "NatIllum" in config.tasks and not envs:
        raise ContractError("NatIllum task needs train-split illuminations")

    sums = {t: [0.0, 0.0, 0] for t in config.tasks}
    errors = 0
    for rec in test_recs:
        sd = load_sample_data(rec, base)
        try:
            est = provider(sd)
        except Exception:
            errors += 1
            continue
        ref = Decomposition(rec.material, sd.env, "ground-truth")
        est_up = upgrade_env(est, sd, config.env_upgrade)
        ref_up = upgrade_env(ref, sd, config.env_upgrade)
        for ti, task in enumerate(config.tasks):
            rng = np.random.default_rng(
                [config.seed, zlib.crc32(rec.id.encode()), ti]
            )
            mp = run_task(
                task, est_up, ref_up, aux, rng, config.variants,
                resolution=config.resolution, mirror_lookup=config.mirror_lookup,
            )
            acc = sums[task]
            acc[0] += mp.mse
            acc[1] += mp.dssim
            acc[2] += 1
    rows = {
        t: TaskStats(s[0] / s[2] if s[2] else 0.0, s[1] / s[2] if s[2] else 0.0, s[2])
        for t, s in sums.items()
    }
    return BenchReport(rows=rows, samples=len(test_recs), errors=errors)


def write_report(report: BenchReport, out_dir) -> None:
    """Emit report.csv, report.md, and report.png into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = list(report.rows)

    lines = ["task,mean_mse_log,mean_dssim,samples"]
    for t in tasks:
        s = report.rows[t]
        lines.append(f"{t},{s.mse!r},{s.dssim!r},{s.count}")
    (out / "report.csv").write_text("\n".join(lines) + "\n")

    header = "| Metric | " + " | ".join(tasks) + " |"
    rule = "|---" * (len(tasks) + 1) + "|"
    mse_row = "| MSE (log HDR) | " + " | ".join(f"{report.rows[t].mse:.4g}" for t in tasks) + " |"
    ds_row = "| DSSIM | " + " | ".join(f"{report.rows[t].dssim:.4g}" for t in tasks) + " |"
    md = "\n".join(
        [
            "# Re-synthesis benchmark",
            "",
            header,
            rule,
            mse_row,
            ds_row,
            "",
            f"Test samples: {report.samples}; provider errors (skipped): {report.errors}.",
            "",
        ]
    )
    (out / "report.md").write_text(md)

    import matplotlib

    matplotlib.use("Agg", force=True)
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    x = np.arange(len(tasks))
    for ax, attr, title in (
        (axes[0], "mse", "mean log-HDR MSE"),
        (axes[1], "dssim", "mean DSSIM"),
    ):
        ax.bar(x, [getattr(report.rows[t], attr) for t in tasks], color="#4878a8")
        ax.set_xticks(x)
        ax.set_xticklabels(tasks, rotation=30, ha="right")
        ax.set_title(title)
        ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out / "report.png", dpi=120)
    plt.close(fig)
