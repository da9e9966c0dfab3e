"""Command-line entry point: each pipeline stage as one subcommand.

Exit codes: 0 success, 2 usage, 3 unreadable or malformed files,
4 violated numeric contracts.  Angles are taken in degrees on the command
line and converted once, here; the library itself works in radians.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from .bench import (
    TASKS,
    BenchConfig,
    ground_truth_provider,
    make_external_provider,
    make_greedy_provider,
    run_benchmark,
    write_report,
)
from .dataset import GenConfig, generate
from .errors import ContractError, FileFormatError
from .exposure import choose_exposure, simulate_ldr, tonemap_8bit
from .fit import GlossGrid, fit_phong, load_basis, precompute_basis, save_basis
from .metrics import dssim, mse_log
from .render import (
    PhongMaterial,
    ReflectanceMap,
    ViewPose,
    render_reflectance_map,
    sphere_normal_grid,
)
from .spherical import EnvironmentMap, load_pfm, resample_envmap, save_pfm
from .upsample import SIGMA_S, build_guide, joint_bilateral_upsample

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_FILE = 3
EXIT_NUMERIC = 4


def _default_threads() -> int:
    raw = os.environ.get("LITSPHERE_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            print(f"warning: ignoring LITSPHERE_THREADS={raw!r}", file=sys.stderr)
    return 1


def _add_view_flags(p) -> None:
    p.add_argument("--azimuth", type=float, default=0.0, help="view azimuth in degrees (default 0)")
    p.add_argument(
        "--declination", type=float, default=0.0,
        help="view declination in degrees, at most 10 (default 0)",
    )


def _view(args) -> ViewPose:
    return ViewPose(math.radians(args.azimuth), math.radians(args.declination))


def _load_rm(path) -> ReflectanceMap:
    """Read a stored RM: square PFM, disk mask implied by the size."""
    px = load_pfm(path)
    if px.shape[0] != px.shape[1]:
        raise ContractError(f"reflectance map must be square, got {px.shape[:2]}")
    mask = sphere_normal_grid(px.shape[0])[1]
    px = px.copy()
    px[~mask] = 0.0  # stored float32 dust outside the disk is not data
    return ReflectanceMap(px, mask)


def cmd_render(args) -> int:
    env = EnvironmentMap(load_pfm(args.env))
    material = PhongMaterial.from_json(Path(args.material).read_text())
    rm = render_reflectance_map(env, material, _view(args), args.resolution)
    save_pfm(rm.pixels, args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    rm = _load_rm(args.rm)
    cache = Path(args.basis_cache) if args.basis_cache else None
    if cache is None:
        env = EnvironmentMap(load_pfm(args.env))
        grid = GlossGrid.make(args.k_min, args.k_max, args.levels)
        basis = precompute_basis(env, _view(args), grid, resolution=rm.resolution)
    else:
        if not (cache / "index.json").exists():
            env = EnvironmentMap(load_pfm(args.env))
            grid = GlossGrid.make(args.k_min, args.k_max, args.levels)
            save_basis(precompute_basis(env, _view(args), grid, resolution=rm.resolution), cache)
        # fit from the stored float32 maps either way, so a cold and a warm
        # cache produce identical results
        basis = load_basis(cache)
    material = fit_phong(rm, basis)
    text = material.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_simulate_ldr(args) -> int:
    px = load_pfm(args.input)
    mask = sphere_normal_grid(px.shape[0])[1] if px.shape[0] == px.shape[1] else None
    params = choose_exposure(px, mask)
    save_pfm(simulate_ldr(px, params), args.out)
    print(json.dumps({"lo": params.lo, "hi": params.hi}))
    return EXIT_OK


def cmd_upsample(args) -> int:
    low = EnvironmentMap(load_pfm(args.env))
    if args.bilinear:
        up = resample_envmap(low, 128, 128)
    else:
        if not args.rm:
            print("error: --rm is required unless --bilinear is given", file=sys.stderr)
            return EXIT_USAGE
        guide = build_guide(_load_rm(args.rm), _view(args), 128, 128)
        up = joint_bilateral_upsample(low, guide, sigma_s=args.sigma_s, sigma_r=args.sigma_r)
    save_pfm(up.pixels, args.out)
    return EXIT_OK


def cmd_metrics(args) -> int:
    est = load_pfm(args.estimate)
    ref = load_pfm(args.reference)
    mask = None
    if args.disk_mask:
        if est.shape[0] != est.shape[1]:
            raise ContractError("--disk-mask needs square images")
        mask = sphere_normal_grid(est.shape[0])[1]
    mse = mse_log(est, ref, mask)
    params = choose_exposure(ref, mask)
    d = dssim(tonemap_8bit(est, params), tonemap_8bit(ref, params))
    print(json.dumps({"mse": mse, "dssim": d}))
    return EXIT_OK


def cmd_gen_dataset(args) -> int:
    cfg = GenConfig(
        count=args.count,
        env_dir=args.env_dir,
        out_dir=args.out,
        resolution=args.resolution,
        seed=args.seed,
        material_dir=args.material_dir,
        material_test_fraction=args.material_test_fraction,
        env_test_fraction=args.env_test_fraction,
        threads=args.threads,
    )
    records = generate(cfg)
    print(json.dumps({"samples": len(records), "out": str(args.out)}))
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.provider == "ground-truth":
        provider = ground_truth_provider
    elif args.provider == "greedy":
        provider = make_greedy_provider(env_dir=args.greedy_env_dir)
    else:
        if not args.external_dir:
            print("error: --external-dir is required with --provider external-files",
                  file=sys.stderr)
            return EXIT_USAGE
        provider = make_external_provider(args.external_dir)
    tasks = TASKS if args.tasks is None else tuple(t.strip() for t in args.tasks.split(","))
    cfg = BenchConfig(
        resolution=args.resolution,
        variants=args.variants,
        seed=args.seed,
        env_upgrade=args.env_upgrade,
        mirror_lookup=args.mirror_lookup,
        tasks=tasks,
    )
    rep = run_benchmark(args.manifest, provider, cfg)
    if args.out:
        write_report(rep, args.out)
    print(
        json.dumps(
            {
                "samples": rep.samples,
                "errors": rep.errors,
                "tasks": {
                    t: {"mse": s.mse, "dssim": s.dssim, "count": s.count}
                    for t, s in rep.rows.items()
                },
            }
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="litsphere",
        description="Reflectance-map synthesis, Phong inversion, and re-synthesis benchmarking.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("render", help="render a reflectance map from an env map and a material")
    r.add_argument("--env", required=True, help="environment map PFM")
    r.add_argument("--material", required=True, help="Phong material JSON")
    r.add_argument("--resolution", type=int, default=128)
    r.add_argument("--out", required=True, help="output RM PFM")
    _add_view_flags(r)
    r.set_defaults(func=cmd_render)

    f = sub.add_parser("fit", help="recover a Phong material from an RM under known illumination")
    f.add_argument("--rm", required=True, help="observed RM PFM")
    f.add_argument("--env", required=True, help="environment map PFM")
    f.add_argument("--out", help="material JSON path (default: print to stdout)")
    f.add_argument("--k-min", type=float, default=1.0)
    f.add_argument("--k-max", type=float, default=1024.0)
    f.add_argument("--levels", type=int, default=100, help="gloss grid size (default 100)")
    f.add_argument("--basis-cache", help="directory of precomputed basis maps; reused if present")
    _add_view_flags(f)
    f.set_defaults(func=cmd_fit)

    s = sub.add_parser("simulate-ldr", help="expose and 8-bit quantize an HDR image")
    s.add_argument("input", help="HDR PFM (square images use the disk mask for percentiles)")
    s.add_argument("--out", required=True, help="output LDR PFM")
    s.set_defaults(func=cmd_simulate_ldr)

    u = sub.add_parser("upsample", help="upsample a 64x64 env map to 128x128")
    u.add_argument("--env", required=True, help="64x64 environment map PFM")
    u.add_argument("--rm", help="guide RM PFM (required unless --bilinear)")
    u.add_argument("--out", required=True)
    u.add_argument("--bilinear", action="store_true", help="plain bilinear, no guide")
    u.add_argument("--sigma-s", type=float, default=SIGMA_S)
    u.add_argument("--sigma-r", type=float, default=None,
                   help="range sigma (default: 10%% of the guide's 95th luminance percentile)")
    _add_view_flags(u)
    u.set_defaults(func=cmd_upsample)

    m = sub.add_parser("metrics", help="log-HDR MSE and DSSIM between two PFMs")
    m.add_argument("estimate")
    m.add_argument("reference")
    m.add_argument("--disk-mask", action="store_true",
                   help="restrict MSE and exposure to the sphere disk")
    m.set_defaults(func=cmd_metrics)

    g = sub.add_parser("gen-dataset", help="generate a labeled RM corpus")
    g.add_argument("--env-dir", required=True, help="directory of environment PFMs")
    g.add_argument("--out", required=True)
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--resolution", type=int, default=128)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--material-dir", help="material JSON corpus (default: random materials)")
    g.add_argument("--material-test-fraction", type=float, default=0.33)
    g.add_argument("--env-test-fraction", type=float, default=1.0 / 7.0)
    g.add_argument("--threads", type=int, default=_default_threads(),
                   help="worker threads (default: LITSPHERE_THREADS or 1)")
    g.set_defaults(func=cmd_gen_dataset)

    b = sub.add_parser("bench", help="run the re-synthesis benchmark over a manifest")
    b.add_argument("--manifest", required=True)
    b.add_argument("--provider", choices=("ground-truth", "greedy", "external-files"),
                   default="ground-truth")
    b.add_argument("--external-dir", help="directory of <id>.material.json / <id>.env.pfm")
    b.add_argument("--greedy-env-dir", help="env estimates for the greedy provider "
                                            "(default: the sample's own map)")
    b.add_argument("--out", help="report directory (CSV, Markdown, figure)")
    b.add_argument("--resolution", type=int, default=128)
    b.add_argument("--variants", type=int, default=50)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--env-upgrade", choices=("guided", "bilinear"), default="guided")
    b.add_argument("--mirror-lookup", action="store_true",
                   help="score MirrorMat by exact env lookup instead of the Phong mirror")
    b.add_argument("--tasks", help="comma-separated task subset (default: all five)")
    b.set_defaults(func=cmd_bench)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits 2 on usage errors, 0 on --help
        return int(e.code or 0)
    try:
        return args.func(args)
    except json.JSONDecodeError as e:
        print(f"error: malformed JSON: {e}", file=sys.stderr)
        return EXIT_FILE
    except FileFormatError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FILE
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FILE
    except ContractError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
