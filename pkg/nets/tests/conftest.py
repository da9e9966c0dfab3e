import json
from pathlib import Path

import numpy as np
import pytest

from litsphere import EnvironmentMap, GenConfig, generate, resample_envmap, save_pfm


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Small rendered dataset at net input resolution: 8 train / 2 test samples."""
    root = tmp_path_factory.mktemp("corpus")
    env_dir = root / "envs"
    env_dir.mkdir()
    rng = np.random.default_rng(5)
    for i in range(4):
        base = rng.uniform(0.05, 3.0, (8, 8, 3))
        env = resample_envmap(EnvironmentMap(base.astype(np.float32)), 64, 64)
        save_pfm(env.pixels, env_dir / f"e{i}.pfm")
    out = root / "tree"
    generate(GenConfig(count=10, env_dir=env_dir, out_dir=out, resolution=128, seed=21))
    return out


@pytest.fixture(scope="session")
def solo_manifest(corpus):
    # one train record on its own, for overfit runs
    lines = (corpus / "manifest.jsonl").read_text().splitlines()
    line = next(l for l in lines if json.loads(l)["split"] == "train")
    path = corpus / "solo.jsonl"
    path.write_text(line + "\n")
    return path


@pytest.fixture(scope="session")
def overfit_run(solo_manifest, tmp_path_factory):
    """Joint net driven onto the single sample; shared by the loss and bench tests."""
    from rmnets import TrainConfig, train

    out = tmp_path_factory.mktemp("overfit")
    ckpt = train(TrainConfig(kind="joint", epochs=500, batch_size=1, seed=0), solo_manifest, out)
    return ckpt, out
