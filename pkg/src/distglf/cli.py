"""Command-line surface.

Subcommands: convert, ssr, asr, disp, refocus, bench, gradcheck, metrics.
Exit codes: 0 success, 1 usage error, 2 data/computation error.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import nn
from .bench import BenchEqualityError, bench_cost_volume, bench_csv
from .extractors import DisparityLevelSet
from .lfio import (
    DataError,
    load_config,
    load_lightfield,
    read_gray,
    read_pfm,
    save_lightfield,
    write_gray,
    write_pfm,
)
from .lightfield import (
    LayoutError,
    LightField,
    MacPIImage,
    lf_to_view_tiles,
    macpi_to_sai,
    sai_to_macpi,
    view_tiles_to_lf,
)
from .metrics import badpix, lf_psnr_ssim, mse100, psnr, ssim
from .networks import (
    DistgASR,
    DistgASRConfig,
    DistgDisp,
    DistgDispConfig,
    DistgSSR,
    DistgSSRConfig,
)
from .refocus import refocus
from .tensor import Tensor, no_grad


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="distglf", description="Light-field disentangling toolkit")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--weights", help="checkpoint file to load")
        sp.add_argument("--config", help="key=value model config file")
        sp.add_argument("--seed", type=int, default=0, help="RNG seed for weight init")
        sp.add_argument("--f64", action="store_true", help="run in 64-bit mode")

    sp = sub.add_parser("convert", help="convert between tiled-view and MacPI image files")
    sp.add_argument("--to", choices=("macpi", "sai"), required=True)
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--bits", type=int, default=16, choices=(8, 16))
    sp.set_defaults(func=cmd_convert)

    sp = sub.add_parser("ssr", help="spatial super-resolution of a light-field file")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--scale", type=int, default=2, choices=(2, 4))
    common(sp)
    sp.set_defaults(func=cmd_ssr)

    sp = sub.add_parser("asr", help="angular super-resolution of a light-field file")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--in-ang", type=int, default=2)
    sp.add_argument("--out-ang", type=int, default=7)
    sp.add_argument("--paste-inputs", action="store_true",
                    help="copy input corner views into the reconstructed grid")
    common(sp)
    sp.set_defaults(func=cmd_asr)

    sp = sub.add_parser("disp", help="disparity estimation to a PFM map")
    sp.add_argument("input")
    sp.add_argument("output")
    common(sp)
    sp.set_defaults(func=cmd_disp)

    sp = sub.add_parser("refocus", help="shift-and-add refocusing")
    sp.add_argument("input")
    sp.add_argument("output")
    sp.add_argument("--focus", type=float, help="focus disparity (plane)")
    sp.add_argument("--focus-map", help="PFM disparity map for region refocus")
    sp.add_argument("--bits", type=int, default=16, choices=(8, 16))
    sp.set_defaults(func=cmd_refocus)

    sp = sub.add_parser("bench", help="DS-AFE vs shift-and-concat cost-volume benchmark")
    sp.add_argument("--ang-res", type=int, default=9)
    sp.add_argument("--size", type=int, default=64, help="spatial H = W")
    sp.add_argument("--channels", type=int, default=8)
    sp.add_argument("--repeats", type=int, default=5)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--csv", help="write the stage table to this CSV file")
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("gradcheck", help="finite-difference checks of the engine ops")
    sp.add_argument("--tol", type=float, default=1e-4)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(func=cmd_gradcheck)

    sp = sub.add_parser("metrics", help="quality metrics between two files")
    sp.add_argument("file_a")
    sp.add_argument("file_b")
    sp.add_argument("--disparity", action="store_true",
                    help="treat inputs as PFM disparity maps (MSEx100 / BadPix)")
    sp.add_argument("--eps", type=float, nargs="*", default=[0.07, 0.03, 0.01])
    sp.set_defaults(func=cmd_metrics)
    return p


# ---- commands ----


def cmd_convert(args):
    if args.to == "macpi":
        lf = load_lightfield(args.input)
        mac = sai_to_macpi(lf)
        write_gray(args.output, mac.data, args.bits)
        with open(args.output + ".lfmeta", "w", encoding="ascii") as f:
            h, w = mac.spa_res
            f.write(f"ang_res={mac.ang_res}\nheight={h}\nwidth={w}\n")
    else:
        from .lfio import load_sidecar

        meta = load_sidecar(args.input)
        img = read_gray(args.input)
        mac = MacPIImage(img, meta["ang_res"])
        save_lightfield(args.output, macpi_to_sai(mac), args.bits)
    return 0


def _model_dtype(args):
    return np.float64 if args.f64 else np.float32


def _load_weights(model, args):
    if args.weights:
        nn.load_checkpoint(model, args.weights)
    return model


def _config_kwargs(args, allowed):
    if not args.config:
        return {}
    values = load_config(args.config)
    bad = set(values) - set(allowed)
    if bad:
        raise UsageError(f"unknown config keys: {sorted(bad)}")
    return values


def cmd_ssr(args):
    lf = load_lightfield(args.input)
    nn.seed(args.seed)
    kwargs = _config_kwargs(
        args, ("channels", "n_groups", "n_blocks", "spatial", "angular", "epi", "epi_weight_sharing")
    )
    cfg = DistgSSRConfig(ang_res=lf.ang_res, upscale=args.scale, **kwargs)
    model = DistgSSR(cfg).eval().to_dtype(_model_dtype(args))
    _load_weights(model, args)
    out = model.super_resolve(lf)
    save_lightfield(args.output, LightField(np.clip(out.data, 0.0, 1.0)))
    print(f"{args.input} -> {args.output}: {out.data.shape}")
    return 0


def cmd_asr(args):
    lf = load_lightfield(args.input)
    if lf.ang_res != args.in_ang:
        raise DataError(f"{args.input} has ang_res {lf.ang_res}, expected {args.in_ang}")
    nn.seed(args.seed)
    kwargs = _config_kwargs(args, ("channels", "n_groups", "n_blocks", "angular", "epi"))
    cfg = DistgASRConfig(ang_res_in=args.in_ang, ang_res_out=args.out_ang, **kwargs)
    model = DistgASR(cfg).eval().to_dtype(_model_dtype(args))
    _load_weights(model, args)
    out = model.reconstruct(lf)
    data = np.clip(out.data, 0.0, 1.0)
    if args.paste_inputs:
        # input corner views keep their identity in the output grid
        last = cfg.ang_res_out - 1
        corners = {(0, 0): (0, 0), (0, 1): (0, last), (1, 0): (last, 0), (1, 1): (last, last)}
        if lf.ang_res == 2:
            for (su, sv), (du, dv) in corners.items():
                data[du, dv] = lf.data[su, sv]
    save_lightfield(args.output, LightField(data))
    print(f"{args.input} -> {args.output}: {data.shape}")
    return 0


def cmd_disp(args):
    lf = load_lightfield(args.input)
    nn.seed(args.seed)
    kwargs = _config_kwargs(
        args, ("channels", "n_spatial_blocks", "n_agg_convs", "levels", "shared_level_weights")
    )
    cfg = DistgDispConfig(ang_res=lf.ang_res, **kwargs)
    model = DistgDisp(cfg).eval().to_dtype(_model_dtype(args))
    _load_weights(model, args)
    disp = model.estimate(lf)
    write_pfm(args.output, disp)
    print(f"{args.input} -> {args.output}: range [{disp.min():.3f}, {disp.max():.3f}]")
    return 0


def cmd_refocus(args):
    lf = load_lightfield(args.input)
    if args.focus_map:
        focus = read_pfm(args.focus_map)
    elif args.focus is not None:
        focus = args.focus
    else:
        raise UsageError("refocus needs --focus or --focus-map")
    img = refocus(lf, focus)
    write_gray(args.output, img, args.bits)
    print(f"{args.input} -> {args.output}")
    return 0


def cmd_bench(args):
    ds, oracle = bench_cost_volume(
        ang_res=args.ang_res,
        height=args.size,
        width=args.size,
        channels=args.channels,
        repeats=args.repeats,
        seed=args.seed,
    )
    table = bench_csv([ds, oracle])
    if args.csv:
        with open(args.csv, "w", encoding="ascii") as f:
            f.write(table)
    print(table, end="")
    print(f"# cost-volume speedup (shift-and-concat / ds_afe): {ds.speedup:.2f}x")
    print(f"# sequential shifting operations in the oracle: {oracle.n_shifts}")
    return 0


def cmd_gradcheck(args):
    from .gradcheck import run_gradcheck

    failures = run_gradcheck(tol=args.tol, seed=args.seed, verbose=True)
    return 0 if not failures else 2


def cmd_metrics(args):
    if args.disparity:
        est, gt = read_pfm(args.file_a), read_pfm(args.file_b)
        print(f"mse100 {mse100(est, gt):.6f}")
        for eps in args.eps:
            print(f"badpix({eps:g}) {badpix(est, gt, eps):.4f}")
        return 0
    from .lfio import sidecar_path
    import os

    if os.path.exists(sidecar_path(args.file_a)) and os.path.exists(sidecar_path(args.file_b)):
        lf_a, lf_b = load_lightfield(args.file_a), load_lightfield(args.file_b)
        p, s = lf_psnr_ssim(lf_a, lf_b)
        print(f"psnr {'inf' if math.isinf(p) else f'{p:.6f}'}")
        print(f"ssim {s:.6f}")
        return 0
    a, b = read_gray(args.file_a), read_gray(args.file_b)
    p = psnr(a, b)
    print(f"psnr {'inf' if math.isinf(p) else f'{p:.6f}'}")
    print(f"ssim {ssim(a, b):.6f}")
    return 0


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except UsageError as e:
        print(f"usage error: {e}", file=sys.stderr)
        return 1
    except (DataError, LayoutError, BenchEqualityError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
