import json

from rmnets.cli import main


class TestTrainCommand:
    def test_trains_and_reports_checkpoint(self, corpus, tmp_path, capsys):
        out = tmp_path / "run"
        code = main(
            [
                "train",
                str(corpus / "manifest.jsonl"),
                "--kind", "material",
                "--epochs", "1",
                "--batch-size", "8",
                "--seed", "0",
                "--out", str(out),
            ]
        )
        assert code == 0
        blob = json.loads(capsys.readouterr().out)
        assert blob["checkpoint"].endswith("checkpoint.pt")
        assert (out / "loss_curve.csv").exists()

    def test_bad_kind_is_usage_error(self, tmp_path, capsys):
        code = main(["train", "m.jsonl", "--kind", "svm", "--out", str(tmp_path)])
        assert code == 2

    def test_missing_manifest_fails_cleanly(self, tmp_path, capsys):
        code = main(["train", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")])
        assert code == 1
        assert "rmnets:" in capsys.readouterr().err


class TestInferCommand:
    def test_writes_exchange_files(self, corpus, solo_manifest, tmp_path, capsys):
        import torch

        from litsphere import load_manifest
        from rmnets import build_model

        torch.manual_seed(0)
        ckpt = tmp_path / "c.pt"
        torch.save({"kind": "joint", "config": {}, "state": build_model("joint").state_dict()}, ckpt)
        rec = load_manifest(solo_manifest)[0]
        code = main(["infer", str(ckpt), str(corpus / rec.rm_ldr), "--out", str(tmp_path / "out")])
        assert code == 0
        blob = json.loads(capsys.readouterr().out)
        assert len(blob["files"]) == 2

    def test_no_arguments_is_usage_error(self):
        assert main([]) == 2
