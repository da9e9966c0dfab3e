"""Synthetic corpus generation: material x illumination x view triplets
rendered to reflectance maps, stored as HDR-log and simulated-LDR PFM
pairs with disjoint train/test splits and a JSONL manifest."""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import ContractError
from .exposure import ExposureParams, choose_exposure, log_encode, simulate_ldr
from .render import PhongMaterial, ViewPose, render_reflectance_map
from .spherical import EnvironmentMap, load_pfm, save_pfm

MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"
MAX_DECLINATION = math.radians(10.0)
KG_MAX = 1024.0


def sample_view(rng) -> ViewPose:
    """Uniform azimuth, declination uniform within +-10 degrees."""
    azimuth = float(rng.uniform(0.0, 2.0 * math.pi))
    declination = float(rng.uniform(-MAX_DECLINATION, MAX_DECLINATION))
    return ViewPose(azimuth, declination)


def sample_material(
    rng, corpus: Optional[Sequence[PhongMaterial]] = None
) -> PhongMaterial:
    """Uniform corpus pick, or random albedos with log-uniform glossiness."""
    if corpus is not None:
        if len(corpus) == 0:
            raise ContractError("material corpus is empty")
        return corpus[int(rng.integers(len(corpus)))]
    kd = tuple(float(v) for v in rng.random(3))
    ks = tuple(float(v) for v in rng.random(3))
    kg = float(math.exp(rng.uniform(0.0, math.log(KG_MAX))))
    return PhongMaterial(kd, ks, kg)


@dataclass(frozen=True)
class GenConfig:
    """Everything `generate` needs; all randomness flows from `seed`."""

    count: int
    env_dir: Path
    out_dir: Path
    resolution: int = 128
    seed: int = 0
    material_dir: Optional[Path] = None  # None selects random materials
    material_test_fraction: float = 0.33
    env_test_fraction: float = 1.0 / 7.0
    threads: int = 1

    def __post_init__(self):
        if self.count < 1:
            raise ContractError("sample count must be positive")
        if self.resolution < 1:
            raise ContractError("resolution must be positive")
        if self.threads < 1:
            raise ContractError("thread count must be positive")
        for f in (self.material_test_fraction, self.env_test_fraction):
            if not 0.0 < f < 1.0:
                raise ContractError(f"split fraction {f} outside (0, 1)")


@dataclass(frozen=True)
class SampleRecord:
    id: str
    split: str
    material: PhongMaterial
    env_id: str
    view: ViewPose
    exposure: ExposureParams
    rm_hdr: str  # paths relative to the output directory
    rm_ldr: str
    env: str

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ContractError(f"unknown split tag {self.split!r}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "v": MANIFEST_VERSION,
                "id": self.id,
                "split": self.split,
                "material": json.loads(self.material.to_json()),
                "env_id": self.env_id,
                "view": {
                    "azimuth": self.view.azimuth,
                    "declination": self.view.declination,
                },
                "exposure": {"lo": self.exposure.lo, "hi": self.exposure.hi},
                "rm_hdr": self.rm_hdr,
                "rm_ldr": self.rm_ldr,
                "env": self.env,
            },
            sort_keys=True,
        )

    @staticmethod
    def from_json(line: str) -> "SampleRecord":
        o = json.loads(line)
        if o.get("v") != MANIFEST_VERSION:
            raise ContractError(f"unsupported manifest version {o.get('v')!r}")
        return SampleRecord(
            id=o["id"],
            split=o["split"],
            material=PhongMaterial.from_json(json.dumps(o["material"])),
            env_id=o["env_id"],
            view=ViewPose(o["view"]["azimuth"], o["view"]["declination"]),
            exposure=ExposureParams(o["exposure"]["lo"], o["exposure"]["hi"]),
            rm_hdr=o["rm_hdr"],
            rm_ldr=o["rm_ldr"],
            env=o["env"],
        )


def load_manifest(path) -> List[SampleRecord]:
    text = Path(path).read_text()
    return [SampleRecord.from_json(line) for line in text.splitlines() if line]


def _split_names(names: List[str], test_fraction: float, rng):
    """Disjoint partition keeping both sides nonempty."""
    if len(names) < 2:
        raise ContractError("need at least two entries to split train/test")
    order = [names[i] for i in rng.permutation(len(names))]
    n_test = min(max(int(round(test_fraction * len(names))), 1), len(names) - 1)
    return sorted(order[n_test:]), sorted(order[:n_test])


def _render_sample(config, i, env_split, mat_split, envs, materials):
    # One rng stream per (seed, id) so thread scheduling cannot matter.
    rng = np.random.default_rng([config.seed, i])
    # Draw order is part of the format: split coin, env, material, view.
    split = "test" if rng.random() < config.material_test_fraction else "train"
    env_pool = env_split[split]
    env_id = env_pool[int(rng.integers(len(env_pool)))]
    if materials is None:
        material = sample_material(rng)
    else:
        pool = mat_split[split]
        material = materials[pool[int(rng.integers(len(pool)))]]
    view = sample_view(rng)
    rm = render_reflectance_map(
        envs[env_id], material, view, config.resolution, dtype=np.float32
    )
    exposure = choose_exposure(rm.pixels, rm.mask)
    ldr = simulate_ldr(rm.pixels, exposure)
    sid = f"{i:06d}"
    rec = SampleRecord(
        id=sid,
        split=split,
        material=material,
        env_id=env_id,
        view=view,
        exposure=exposure,
        rm_hdr=f"rm_hdr/{sid}.pfm",
        rm_ldr=f"rm_ldr/{sid}.pfm",
        env=f"env/{env_id}.pfm",
    )
    out = Path(config.out_dir)
    save_pfm(log_encode(rm.pixels), out / rec.rm_hdr)
    save_pfm(ldr, out / rec.rm_ldr)
    return rec


def generate(config: GenConfig) -> List[SampleRecord]:
    """Render the corpus and write `{env,rm_hdr,rm_ldr}/` plus the manifest.

    Environment maps and (in corpus mode) materials are split disjointly;
    test samples draw from test pools only.  Regenerating with the same
    config is byte-identical, independent of the thread count.
    """
    env_paths = sorted(Path(config.env_dir).glob("*.pfm"))
    if len(env_paths) < 2:
        raise ContractError("need at least two illumination maps to split")
    envs: Dict[str, EnvironmentMap] = {
        p.stem: EnvironmentMap(load_pfm(p)) for p in env_paths
    }

    materials = None
    mat_names: List[str] = []
    if config.material_dir is not None:
        mat_paths = sorted(Path(config.material_dir).glob("*.json"))
        if len(mat_paths) < 2:
            raise ContractError("material corpus needs at least two entries")
        materials = {p.stem: PhongMaterial.from_json(p.read_text()) for p in mat_paths}
        mat_names = sorted(materials)

    split_rng = np.random.default_rng([config.seed])
    env_train, env_test = _split_names(sorted(envs), config.env_test_fraction, split_rng)
    env_split = {"train": env_train, "test": env_test}
    mat_split = None
    if materials is not None:
        tr, te = _split_names(mat_names, config.material_test_fraction, split_rng)
        mat_split = {"train": tr, "test": te}

    out = Path(config.out_dir)
    for sub in ("env", "rm_hdr", "rm_ldr"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    for env_id, env in envs.items():  # deduplicated: one file per map, not per sample
        save_pfm(env.pixels, out / "env" / f"{env_id}.pfm")

    def work(i):
        return _render_sample(config, i, env_split, mat_split, envs, materials)

    if config.threads == 1:
        records = [work(i) for i in range(config.count)]
    else:
        with ThreadPoolExecutor(max_workers=config.threads) as pool:
            records = list(pool.map(work, range(config.count)))

    manifest = "".join(r.to_json() + "\n" for r in records)
    (out / MANIFEST_NAME).write_text(manifest)
    return records
