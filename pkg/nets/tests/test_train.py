import dataclasses

import pytest
import torch

from rmnets import ManifestDataset, TrainConfig, load_checkpoint, train


class TestConfig:
    def test_defaults(self):
        cfg = TrainConfig()
        assert cfg.kind == "joint"
        assert cfg.epochs == 20
        assert cfg.batch_size == 8
        assert cfg.split == "train"

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"kind": "vae"},
            {"epochs": 0},
            {"batch_size": 0},
            {"learning_rate": 0.0},
            {"huber_beta": -1.0},
        ],
    )
    def test_rejects_bad_values(self, kwargs):
        with pytest.raises(ValueError):
            TrainConfig(**kwargs)


class TestDataset:
    def test_loads_the_train_split(self, corpus):
        data = ManifestDataset(corpus / "manifest.jsonl")
        assert len(data) == 8
        x, mat, env = next(data.batches(3, list(range(len(data)))))
        assert x.shape == (3, 3, 128, 128)
        assert mat.shape == (3, 7)
        assert env.shape == (3, 3, 64, 64)
        assert x.dtype == torch.float32

    def test_gloss_target_is_log_encoded(self, corpus):
        from litsphere import load_manifest

        data = ManifestDataset(corpus / "manifest.jsonl")
        recs = {r.id: r for r in load_manifest(corpus / "manifest.jsonl")}
        kg = recs[data.ids[0]].material.kg
        assert data.materials[0][6].item() == pytest.approx(torch.log(torch.tensor(kg)).item(), rel=1e-6)

    def test_empty_split_rejected(self, corpus):
        with pytest.raises(ValueError, match="no 'validation'"):
            ManifestDataset(corpus / "manifest.jsonl", split="validation")


class TestTraining:
    def test_loss_decreases_over_epochs(self, corpus, tmp_path):
        cfg = TrainConfig(kind="material", epochs=5, batch_size=4, seed=0)
        train(cfg, corpus / "manifest.jsonl", tmp_path)
        rows = (tmp_path / "loss_curve.csv").read_text().splitlines()
        assert rows[0] == "epoch,loss"
        losses = [float(r.split(",")[1]) for r in rows[1:]]
        assert len(losses) == 5
        assert losses[-1] < losses[0]

    def test_same_seed_reproduces_curve_and_weights(self, corpus, tmp_path):
        cfg = TrainConfig(kind="material", epochs=2, batch_size=4, seed=9)
        a = train(cfg, corpus / "manifest.jsonl", tmp_path / "a")
        b = train(cfg, corpus / "manifest.jsonl", tmp_path / "b")
        assert (tmp_path / "a" / "loss_curve.csv").read_bytes() == (tmp_path / "b" / "loss_curve.csv").read_bytes()
        ma, _ = load_checkpoint(a)
        mb, _ = load_checkpoint(b)
        sa, sb = ma.state_dict(), mb.state_dict()
        assert sa.keys() == sb.keys()
        for k in sa:
            assert torch.equal(sa[k], sb[k])

    def test_checkpoint_records_config(self, corpus, tmp_path):
        cfg = TrainConfig(kind="illumination", epochs=1, batch_size=8, seed=2)
        ckpt = train(cfg, corpus / "manifest.jsonl", tmp_path)
        blob = torch.load(ckpt, map_location="cpu", weights_only=True)
        assert blob["kind"] == "illumination"
        assert blob["config"] == dataclasses.asdict(cfg)
