"""Command-line surface: denoise, ablation sweeps, metrics, noise synthesis.

Exit codes: 0 ok, 2 usage/config error, 3 I/O error, 4 format error.
Sweep output is CSV with the stable schema: axis,value,psnr_db,ssim,time_s.
"""

import argparse
import sys
import time
from dataclasses import replace

import numpy as np

from . import metrics, seqio
from .engine import (
    ConfigError,
    EngineConfig,
    denoise_baseline3d,
    denoise_multiscale,
    denoise_sequence,
)
from .windows import WindowError

SWEEP_HEADER = "axis,value,psnr_db,ssim,time_s"


def _parse_scales(text):
    return tuple(int(v) for v in text.split(",")) if text else ()


def _parse_weights(text):
    return tuple(float(v) for v in text.replace(":", ",").split(","))


def _engine_config(args, sigma):
    return EngineConfig(
        sigma=sigma,
        block=args.block,
        stride_div=args.stride_div,
        taps=args.taps,
        window=args.window,
        dc=args.dc,
        mode=args.mode,
        scales=_parse_scales(args.scales),
        flows=args.flows,
    )


def _load_optional(args):
    bundle = seqio.load_weights(args.weights) if args.weights else None
    clean = seqio.read_sequence(args.clean) if args.clean else None
    return bundle, clean


def _run_denoise(seq, cfg, args, bundle, clean, on_frame=None):
    if args.baseline3d:
        return denoise_baseline3d(seq, cfg, threads=args.threads, on_frame=on_frame)
    if cfg.scales:
        weights = _parse_weights(args.scale_weights) if args.scale_weights else None
        return denoise_multiscale(seq, cfg, weights=weights, bundle=bundle,
                                  clean=clean, threads=args.threads,
                                  on_frame=on_frame)
    return denoise_sequence(seq, cfg, bundle=bundle, clean=clean,
                            threads=args.threads, on_frame=on_frame)


def cmd_denoise(args):
    if args.blind and args.weights is None:
        raise ConfigError("--blind requires --weights")
    if args.dc == "gt" and args.clean is None:
        raise ConfigError("--dc gt requires --clean")
    if args.window == "trained" and args.weights is None:
        raise ConfigError("--window trained requires --weights")
    sigma = "blind" if args.blind else args.sigma
    cfg = _engine_config(args, sigma)
    seq = seqio.read_sequence(args.input)
    bundle, clean = _load_optional(args)
    frame_times = {}
    start = time.perf_counter()
    out = _run_denoise(seq, cfg, args, bundle, clean,
                       on_frame=lambda t, s: frame_times.__setitem__(t, s))
    total = time.perf_counter() - start
    seqio.write_sequence(out, args.output, dtype=args.out_dtype)
    for t in sorted(frame_times):
        print(f"frame {t}: {frame_times[t]:.3f} s")
    n = max(len(frame_times), 1)
    print(f"total: {total:.3f} s ({total / n:.3f} s/frame, {n} frames)")
    return 0


_SWEEP_AXES = ("stride", "blocksize", "dc", "window", "scale-weights")


def _sweep_config(args, axis, value):
    cfg = _engine_config(args, args.sigma)
    weights = None
    if axis == "stride":
        cfg = replace(cfg, stride_div=int(value))
    elif axis == "blocksize":
        cfg = replace(cfg, block=int(value))
    elif axis == "dc":
        cfg = replace(cfg, dc=value)
    elif axis == "window":
        cfg = replace(cfg, window=value)
    elif axis == "scale-weights":
        weights = _parse_weights(value)
        if not cfg.scales:
            raise ConfigError("scale-weights axis requires --scales")
    return cfg, weights


def cmd_sweep(args):
    if args.axis not in _SWEEP_AXES:
        raise ConfigError(f"axis must be one of {_SWEEP_AXES}")
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("sweep needs a nonempty --values list")
    clean = seqio.read_sequence(args.clean)
    bundle = seqio.load_weights(args.weights) if args.weights else None
    rows = []
    for value in values:
        cfg, weights = _sweep_config(args, args.axis, value)
        psnrs, ssims, times = [], [], []
        for rep in range(args.reps):
            noisy = metrics.add_awgn(
                clean, metrics.NoiseModel(args.sigma, seed=args.seed + rep)
            )
            start = time.perf_counter()
            if cfg.scales:
                out = denoise_multiscale(noisy, cfg, weights=weights, bundle=bundle,
                                         clean=clean, threads=args.threads)
            else:
                out = denoise_sequence(noisy, cfg, bundle=bundle, clean=clean,
                                       threads=args.threads)
            times.append(time.perf_counter() - start)
            psnrs.append(metrics.psnr(clean, out)[1])
            ssims.append(metrics.ssim(clean, out)[1])
        rows.append((args.axis, value, float(np.mean(psnrs)),
                     float(np.mean(ssims)), float(np.mean(times))))
    lines = [SWEEP_HEADER] + [
        f"{axis},{value},{p:.4f},{s:.5f},{t:.3f}" for axis, value, p, s, t in rows
    ]
    text = "\n".join(lines) + "\n"
    if args.out and args.out != "-":
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_metrics(args):
    ref = seqio.read_sequence(args.ref)
    test = seqio.read_sequence(args.test)
    p_frames, p_mean = metrics.psnr(ref, test)
    s_frames, s_mean = metrics.ssim(ref, test)
    print("frame,psnr_db,ssim")
    for t in range(p_frames.size):
        print(f"{t},{p_frames[t]:.4f},{s_frames[t]:.5f}")
    print(f"mean,{p_mean:.4f},{s_mean:.5f}")
    return 0


def cmd_add_noise(args):
    seq = seqio.read_sequence(args.input)
    model = metrics.NoiseModel(args.sigma, seed=args.seed, clip=not args.no_clip)
    seqio.write_sequence(metrics.add_awgn(seq, model), args.output,
                         dtype=args.out_dtype)
    return 0


def _add_engine_flags(p):
    p.add_argument("--block", type=int, default=16, help="block size B")
    p.add_argument("--stride-div", type=int, default=3, dest="stride_div",
                   help="stride divisor d; stride = max(1, B//d)")
    p.add_argument("--taps", type=int, default=5, help="temporal taps")
    p.add_argument("--window", default="gaussian",
                   choices=["cosine", "gaussian", "trained"])
    p.add_argument("--dc", default="median", choices=["mean", "median", "gt"])
    p.add_argument("--mode", default="classic", choices=["classic", "refined"])
    p.add_argument("--scales", default="", help="comma list of multi-scale blocks")
    p.add_argument("--flows", default=None, help="directory of t{t}_n{k}.flo files")
    p.add_argument("--weights", default=None, help="W4DW weight bundle")
    p.add_argument("--clean", default=None, help="clean reference sequence")
    p.add_argument("--threads", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(prog="wiener4d",
                                     description="4D Wiener video denoiser")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("denoise", help="denoise a sequence")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--sigma", type=float, default=None, help="noise STD")
    p.add_argument("--blind", action="store_true", help="estimate noise per pixel")
    p.add_argument("--baseline3d", action="store_true",
                   help="run the 3D grayscale baseline")
    p.add_argument("--scale-weights", default=None, dest="scale_weights",
                   help="comma/colon list of multi-scale weights")
    p.add_argument("--out-dtype", default="f32", choices=["f32", "u8"],
                   dest="out_dtype")
    _add_engine_flags(p)
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("sweep", help="ablation sweep emitting CSV")
    p.add_argument("--clean", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--axis", required=True, choices=list(_SWEEP_AXES))
    p.add_argument("--values", required=True,
                   help="comma list; scale-weights values use colons, e.g. 1:0:0")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--out", default="-", help="CSV path or - for stdout")
    p.add_argument("--block", type=int, default=16)
    p.add_argument("--stride-div", type=int, default=3, dest="stride_div")
    p.add_argument("--taps", type=int, default=5)
    p.add_argument("--window", default="gaussian",
                   choices=["cosine", "gaussian", "trained"])
    p.add_argument("--dc", default="median", choices=["mean", "median", "gt"])
    p.add_argument("--mode", default="classic", choices=["classic", "refined"])
    p.add_argument("--scales", default="")
    p.add_argument("--flows", default=None)
    p.add_argument("--weights", default=None)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("metrics", help="PSNR/SSIM between two sequences")
    p.add_argument("--ref", required=True)
    p.add_argument("--test", required=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("add-noise", help="add seeded Gaussian noise")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", dest="output", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-clip", action="store_true",
                   help="skip clamping noisy samples to [0, 255]")
    p.add_argument("--out-dtype", default="f32", choices=["f32", "u8"],
                   dest="out_dtype")
    p.set_defaults(func=cmd_add_noise)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "denoise" and not args.blind and args.sigma is None:
            raise ConfigError("denoise needs --sigma or --blind")
        return args.func(args)
    except (ConfigError, WindowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except seqio.FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 4
    except (FileNotFoundError, OSError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, KeyError) as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
