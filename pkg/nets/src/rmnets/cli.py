"""Command-line front end: train on a dataset manifest, infer on one map."""

import argparse
import json
import sys


def cmd_train(args) -> int:
    from .train import TrainConfig, train

    config = TrainConfig(
        kind=args.kind,
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        huber_beta=args.huber_beta,
        seed=args.seed,
        split=args.split,
    )
    ckpt = train(config, args.manifest, args.out)
    print(json.dumps({"checkpoint": str(ckpt)}))
    return 0


def cmd_infer(args) -> int:
    from .infer import infer

    written = infer(args.checkpoint, args.rm, args.out)
    print(json.dumps({"files": [str(p) for p in written]}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rmnets", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    t = sub.add_parser("train", help="fit a net on a dataset manifest")
    t.add_argument("manifest")
    t.add_argument("--kind", choices=("material", "illumination", "joint"), default="joint")
    t.add_argument("--epochs", type=int, default=20)
    t.add_argument("--batch-size", type=int, default=8)
    t.add_argument("--learning-rate", type=float, default=1e-3)
    t.add_argument("--huber-beta", type=float, default=1.0)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("--split", default="train")
    t.add_argument("--out", required=True, help="directory for checkpoint.pt and loss_curve.csv")
    t.set_defaults(fn=cmd_train)

    i = sub.add_parser("infer", help="decompose one reflectance map into exchange files")
    i.add_argument("checkpoint")
    i.add_argument("rm", help="reflectance map PFM; its stem names the outputs")
    i.add_argument("--out", required=True)
    i.set_defaults(fn=cmd_infer)
    return p


def main(argv=None) -> int:
    from litsphere import LitsphereError

    try:
        args = build_parser().parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.fn(args)
    except (ValueError, OSError, LitsphereError) as e:
        print(f"rmnets: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
