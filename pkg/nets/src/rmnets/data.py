"""Manifest-backed example loading.

Inputs are the stored LDR reflectance maps, log-encoded and laid out
channels-first. Targets are the 7-parameter material vector (gloss in log
space) and the 64x64 log-encoded environment map.
"""

import math
from pathlib import Path

import numpy as np
import torch

from litsphere import EnvironmentMap, load_manifest, load_pfm, log_encode, resample_envmap

from .models import ENV_SIZE, INPUT_SIZE


def _chw(img: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(np.transpose(img, (2, 0, 1))))


def encode_input(rm_pixels: np.ndarray) -> torch.Tensor:
    """Log-encode a reflectance map image into a 3x128x128 float tensor."""
    if rm_pixels.shape[0] != INPUT_SIZE or rm_pixels.shape[1] != INPUT_SIZE:
        raise ValueError(
            f"expected a {INPUT_SIZE}x{INPUT_SIZE} reflectance map, "
            f"got {rm_pixels.shape[0]}x{rm_pixels.shape[1]}"
        )
    return _chw(log_encode(rm_pixels).astype(np.float32))


def material_target(material) -> torch.Tensor:
    vec = [*material.kd, *material.ks, math.log(material.kg)]
    return torch.tensor(vec, dtype=torch.float32)


def env_target(env: EnvironmentMap) -> torch.Tensor:
    if env.pixels.shape[0] != ENV_SIZE or env.pixels.shape[1] != ENV_SIZE:
        env = resample_envmap(env, ENV_SIZE, ENV_SIZE)
    return _chw(log_encode(env.pixels).astype(np.float32))


class ManifestDataset:
    """Every sample of one split, loaded eagerly; env targets shared per env_id."""

    def __init__(self, manifest_path, split: str = "train"):
        manifest_path = Path(manifest_path)
        base = manifest_path.parent
        records = [r for r in load_manifest(manifest_path) if r.split == split]
        if not records:
            raise ValueError(f"manifest has no {split!r} records")
        env_cache: dict = {}
        self.inputs = []
        self.materials = []
        self.envs = []
        self.ids = []
        for rec in records:
            self.inputs.append(encode_input(load_pfm(base / rec.rm_ldr)))
            self.materials.append(material_target(rec.material))
            if rec.env_id not in env_cache:
                env_cache[rec.env_id] = env_target(EnvironmentMap(load_pfm(base / rec.env)))
            self.envs.append(env_cache[rec.env_id])
            self.ids.append(rec.id)

    def __len__(self) -> int:
        return len(self.ids)

    def batches(self, batch_size: int, order):
        """Yield (input, material target, env target) stacks in the given order."""
        for lo in range(0, len(order), batch_size):
            idx = order[lo:lo + batch_size]
            yield (
                torch.stack([self.inputs[i] for i in idx]),
                torch.stack([self.materials[i] for i in idx]),
                torch.stack([self.envs[i] for i in idx]),
            )
