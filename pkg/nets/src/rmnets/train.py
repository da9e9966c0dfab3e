"""Training loop: Adam on Huber loss, one CSV row per epoch, reproducible."""

import csv
import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F

from .data import ManifestDataset
from .models import build_model


@dataclass(frozen=True)
class TrainConfig:
    """Toy-scale defaults: Adam at 1e-3, batches of 8, 20 epochs.

    None of these come from a principled search; they are small enough to
    run on a CPU in minutes and big enough for the loss to move.
    """

    kind: str = "joint"
    epochs: int = 20
    batch_size: int = 8
    learning_rate: float = 1e-3
    huber_beta: float = 1.0
    seed: int = 0
    split: str = "train"

    def __post_init__(self):
        if self.kind not in ("material", "illumination", "joint"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if not (self.learning_rate > 0.0) or not (self.huber_beta > 0.0):
            raise ValueError("learning_rate and huber_beta must be positive")


def huber(pred: torch.Tensor, target: torch.Tensor, beta: float = 1.0) -> torch.Tensor:
    """Smooth L1: quadratic inside +-beta, linear outside."""
    return F.smooth_l1_loss(pred, target, beta=beta)


def batch_loss(model, kind: str, x, mat, env, beta: float) -> torch.Tensor:
    if kind == "material":
        return huber(model(x), mat, beta)
    if kind == "illumination":
        return huber(model(x), env, beta)
    pred_mat, pred_env = model(x)
    # the two heads keep independent losses; one optimizer steps their sum
    return huber(pred_mat, mat, beta) + huber(pred_env, env, beta)


def train(config: TrainConfig, manifest_path, out_dir) -> Path:
    """Fit the configured net on one manifest split; returns the checkpoint path.

    Writes checkpoint.pt and loss_curve.csv (epoch index, mean sample loss)
    under out_dir. The same config on the same data reproduces both files.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = ManifestDataset(manifest_path, config.split)
    torch.manual_seed(config.seed)
    model = build_model(config.kind)
    opt = torch.optim.Adam(model.parameters(), lr=config.learning_rate)
    order_rng = np.random.default_rng(config.seed)
    curve = []
    for _ in range(config.epochs):
        order = order_rng.permutation(len(data)).tolist()
        total = 0.0
        seen = 0
        for x, mat, env in data.batches(config.batch_size, order):
            opt.zero_grad()
            loss = batch_loss(model, config.kind, x, mat, env, config.huber_beta)
            loss.backward()
            opt.step()
            total += float(loss.detach()) * x.shape[0]
            seen += x.shape[0]
        curve.append(total / seen)

    with open(out_dir / "loss_curve.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "loss"])
        for i, value in enumerate(curve):
            writer.writerow([i, repr(value)])
    ckpt_path = out_dir / "checkpoint.pt"
    torch.save(
        {
            "kind": config.kind,
            "config": dataclasses.asdict(config),
            "state": model.state_dict(),
        },
        ckpt_path,
    )
    return ckpt_path
