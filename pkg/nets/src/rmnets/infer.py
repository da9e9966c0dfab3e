"""Apply a checkpoint to one reflectance map and write the exchange files.

Output follows the layout the benchmark's external-files provider reads:
<id>.material.json next to <id>.env.pfm, where <id> is the input file stem.
"""

import json
import math
from pathlib import Path

import numpy as np
import torch

from litsphere import load_pfm, log_decode, save_pfm

from .data import encode_input
from .models import build_model


def load_checkpoint(path):
    blob = torch.load(path, map_location="cpu", weights_only=True)
    try:
        kind = blob["kind"]
        state = blob["state"]
    except (TypeError, KeyError) as e:
        raise ValueError(f"not a checkpoint file: {path}") from e
    model = build_model(kind)
    model.load_state_dict(state)
    model.eval()
    return model, kind


def decode_material(vec) -> str:
    """Seven regressed values -> material JSON text; gloss leaves log space."""
    values = [float(v) for v in vec]
    if len(values) != 7 or not all(math.isfinite(v) for v in values):
        raise ValueError("material head must emit 7 finite values")
    return json.dumps(
        {
            "kd": [max(v, 0.0) for v in values[0:3]],
            "ks": [max(v, 0.0) for v in values[3:6]],
            "kg": max(math.exp(values[6]), 1.0),
        }
    )


def decode_env(pred: torch.Tensor) -> np.ndarray:
    """Predicted log map back to linear radiance, rows x cols x 3 float32."""
    log_img = pred.detach().numpy().transpose(1, 2, 0).astype(np.float64)
    # the codec's epsilon can leave values a hair below zero
    return np.clip(log_decode(log_img), 0.0, None).astype(np.float32)


def infer(checkpoint_path, rm_path, out_dir):
    """Run one map through the checkpointed net; returns the files written."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rm_path = Path(rm_path)
    model, kind = load_checkpoint(checkpoint_path)
    x = encode_input(load_pfm(rm_path)).unsqueeze(0)
    with torch.no_grad():
        if kind == "material":
            mat, env = model(x)[0], None
        elif kind == "illumination":
            mat, env = None, model(x)[0]
        else:
            mat, env = model(x)
            mat, env = mat[0], env[0]
    written = []
    if mat is not None:
        path = out_dir / f"{rm_path.stem}.material.json"
        path.write_text(decode_material(mat) + "\n")
        written.append(path)
    if env is not None:
        path = out_dir / f"{rm_path.stem}.env.pfm"
        save_pfm(decode_env(env), path)
        written.append(path)
    return written
