#!/usr/bin/env python3
"""Benchmark the numba kernels against their pure-numpy fallbacks.

Times each hot kernel on engine-shaped workloads, then an end-to-end
denoise with each backend (the end-to-end runs happen in subprocesses so
the WIENER4D_BACKEND flag is honoured at import time).

Usage: python benchmarks/bench_backends.py [--frames 6] [--size 256]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np


def timeit(fn, *args, repeat=5):
    fn(*args)  # warmup / JIT
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels():
    from wiener4d import _kernels as k

    rng = np.random.default_rng(0)
    n = 2000
    buf = rng.standard_normal((5, 3, 512, 512))
    pos = rng.integers(0, 512 - 16, size=(2, n))
    ys = np.ascontiguousarray(pos[0], dtype=np.int64)
    xs = np.ascontiguousarray(pos[1], dtype=np.int64)
    blocks = rng.standard_normal((n, 5, 3, 16, 16))
    flat = blocks.reshape(n, -1).copy()
    acc = np.zeros((3, 512, 512))
    small = rng.standard_normal((n, 3, 16, 16))
    win = rng.uniform(0.5, 1.0, (16, 16))
    dc = rng.standard_normal(n)
    spec = np.fft.rfftn(blocks, axes=(1, 2, 3, 4))
    pnn = np.full(n, 50.0)
    phases = np.exp(2j * np.pi * np.arange(5) * 2 / 5) / 5
    frame = rng.uniform(0, 255, (3, 512, 512))
    flow = rng.uniform(-3, 3, (512, 512, 2))

    pairs = [
        ("gather_blocks", k._gather_blocks_numba, k._gather_blocks_numpy,
         (buf, ys, xs, 16)),
        ("scatter_blocks", k._scatter_blocks_numba, k._scatter_blocks_numpy,
         (acc, small, ys, xs)),
        ("block_median", k._block_median_numba, k._block_median_numpy, (flat,)),
        ("taper_blocks", k._taper_blocks_numba, k._taper_blocks_numpy,
         (blocks.copy(), dc, win)),
        ("core_scale", k._core_scale_numba, k._core_scale_numpy, (spec.copy(), pnn)),
        ("collapse_centre", k._collapse_centre_numba, k._collapse_centre_numpy,
         (spec, phases)),
        ("warp_bilinear", k._warp_bilinear_numba, k._warp_bilinear_numpy,
         (frame, flow)),
    ]
    print(f"{'kernel':<16} {'numba':>10} {'numpy':>10} {'ratio':>7}")
    for name, nb, npy, args in pairs:
        t_nb = timeit(nb, *args)
        t_np = timeit(npy, *args)
        print(f"{name:<16} {t_nb*1e3:9.2f}ms {t_np*1e3:9.2f}ms {t_np/t_nb:6.2f}x")


END_TO_END = r"""
import time, numpy as np
import wiener4d as w
rng = np.random.default_rng(0)
frames, size = {frames}, {size}
yy, xx = np.mgrid[0:size, 0:size].astype(float)
clip = np.stack([np.repeat((127.5 + 110*np.sin(2*np.pi*(xx+yy-6*t)/96))[None], 3, 0)
                 for t in range(frames)])
noisy = w.add_awgn(np.floor(clip.clip(0,255)+0.5), w.NoiseModel(20.0, seed=1))
cfg = w.EngineConfig(sigma=20.0)
w.denoise_sequence(noisy[:1], cfg)
start = time.perf_counter()
w.denoise_sequence(noisy, cfg)
print(f"  backend={{w.BACKEND}}: {{time.perf_counter()-start:.2f}}s "
      f"for {{frames}} frames of {{size}}x{{size}}")
"""


def bench_end_to_end(frames, size):
    for backend in ("numba", "numpy"):
        env = dict(os.environ, WIENER4D_BACKEND=backend)
        code = END_TO_END.format(frames=frames, size=size)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--frames", type=int, default=6)
    parser.add_argument("--size", type=int, default=256)
    parser.add_argument("--kernels-only", action="store_true")
    args = parser.parse_args()
    print("== per-kernel: numba vs numpy ==", flush=True)
    bench_kernels()
    if not args.kernels_only:
        print("== end-to-end denoise ==", flush=True)
        bench_end_to_end(args.frames, args.size)


if __name__ == "__main__":
    main()
