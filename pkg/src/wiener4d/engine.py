"""Denoising pipelines: the 4D Wiener filter, the 3D grayscale baseline,
multi-scale averaging, and blind-noise wiring.

Per frame the engine builds a temporal buffer (boundary frames replicated,
optionally motion-compensated), slides an analysis window over a clamped
block grid, and for every block: removes a scalar DC offset, tapers with
the analysis window, transforms with an unnormalized FFT over
taps x colour x space, applies cored Wiener gains, inverse-transforms, and
accumulates w_s * (x_hat + w_a * dc) into the frame along with the weight
map w_s * w_a. The output frame is the accumulation divided by the weight
map, and only the centre temporal tap is kept.

Re-adding the DC through the analysis window (rather than bare) makes the
sigma = 0 path an exact partition-of-unity identity for any window pair,
grid, or DC estimator.

Frames are independent work items; each frame is processed by exactly one
worker in a fixed block order, so outputs are bit-identical for any worker
count.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft as sfft

from . import mocomp, refine_nets, spectral, windows
from ._kernels import (
    block_median,
    collapse_centre,
    core_scale,
    gather_blocks,
    scatter_blocks,
    taper_blocks,
)

__all__ = [
    "EngineConfig",
    "ConfigError",
    "denoise_sequence",
    "denoise_baseline3d",
    "denoise_multiscale",
    "blind_sigma",
    "build_buffer",
    "luma",
]

LUMA_WEIGHTS = (0.299, 0.587, 0.114)
_CHUNK_ELEMS = 1 << 21


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    sigma: float | str = 0.0        # noise STD on the 8-bit scale, or "blind"
    block: int = 16
    stride_div: int = 3             # stride = max(1, B // stride_div)
    taps: int = 5
    window: str = "gaussian"        # cosine | gaussian | trained
    alpha: float | None = None
    dc: str = "median"              # mean | median | gt
    mode: str = "classic"           # classic | refined
    baseline3d: bool = False
    scales: tuple = ()              # block sizes for multi-scale averaging
    flows: object = None            # optional flow directory for mocomp
    clamp_gains: bool = False       # clip refined gains to [0, 1]

    @property
    def stride(self):
        return max(1, self.block // self.stride_div)

    def validate(self):
        blocks = (self.block,) + tuple(self.scales)
        for b in blocks:
            if b < 8 or (b & (b - 1)) != 0:
                raise ConfigError(f"block size must be a power of two >= 8, got {b}")
        if not 2 <= self.stride_div <= 8:
            raise ConfigError(f"stride divisor must be in [2, 8], got {self.stride_div}")
        if self.taps < 1 or self.taps % 2 == 0:
            raise ConfigError(f"temporal taps must be odd and >= 1, got {self.taps}")
        if self.window not in ("cosine", "gaussian", "trained"):
            raise ConfigError(f"unknown window shape {self.window!r}")
        if self.dc not in ("mean", "median", "gt"):
            raise ConfigError(f"unknown dc mode {self.dc!r}")
        if self.mode not in ("classic", "refined"):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if isinstance(self.sigma, str):
            if self.sigma != "blind":
                raise ConfigError(f"sigma must be a number or 'blind', got {self.sigma!r}")
        elif self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")


def luma(seq):
    """BT.601 luma of an [F, 3, H, W] sequence -> [F, H, W]."""
    w = np.asarray(LUMA_WEIGHTS, dtype=np.float64)
    return np.tensordot(w, np.asarray(seq, dtype=np.float64), axes=([0], [1]))


def build_buffer(seq, t, taps, flows=None):
    """[T, C, H, W] buffer centred on frame t; boundaries replicate."""
    seq = np.asarray(seq, dtype=np.float64)
    if flows is not None:
        return mocomp.build_buffer_mc(seq, t, taps, flows)
    r = taps // 2
    idx = np.clip(np.arange(t - r, t + r + 1), 0, seq.shape[0] - 1)
    return np.ascontiguousarray(seq[idx])


def blind_sigma(seq, t, bundle):
    """Per-pixel noise STD map for frame t from the bundle's noise net."""
    if bundle is None:
        raise ConfigError("blind mode requires a weight bundle with a noise net")
    net = refine_nets.build_noise_net(bundle)
    return refine_nets.estimate_noise_map(net, np.asarray(seq, dtype=np.float64)[t])[0]


def _grid(height, width, block, stride):
    ys = windows.block_positions(height, block, stride)
    xs = windows.block_positions(width, block, stride)
    oy = np.repeat(ys, xs.size)
    ox = np.tile(xs, ys.size)
    return ys, xs, oy, ox


def _block_dc(blocks, mode, clean_blocks=None):
    flat = blocks.reshape(blocks.shape[0], -1)
    if mode == "mean":
        return flat.mean(axis=1)
    if mode == "median":
        return block_median(flat)
    return clean_blocks.reshape(clean_blocks.shape[0], -1).mean(axis=1)


def _footprint_vars(sq_sat, oy, ox, block):
    # mean of a squared-map over each block footprint via a summed-area table
    a = sq_sat[oy + block, ox + block]
    b = sq_sat[oy, ox + block]
    c = sq_sat[oy + block, ox]
    d = sq_sat[oy, ox]
    return (a - b - c + d) / float(block * block)


def _sq_sat(map2d):
    sat = np.zeros((map2d.shape[0] + 1, map2d.shape[1] + 1), dtype=np.float64)
    np.cumsum(np.cumsum(map2d ** 2, axis=0), axis=1, out=sat[1:, 1:])
    return sat


class _FramePlan:
    """Geometry and window data shared by every frame of one run."""

    def __init__(self, cfg, height, width, bundle):
        if cfg.block > min(height, width):
            raise ConfigError(
                f"block {cfg.block} exceeds frame size {height}x{width}"
            )
        self.cfg = cfg
        self.pair = windows.make_window(cfg.window, cfg.block, cfg.alpha, bundle)
        self.ys, self.xs, self.oy, self.ox = _grid(height, width, cfg.block, cfg.stride)
        self.wmap = windows.norm_map(self.pair, height, width, cfg.stride)
        self.wnorm2 = spectral.window_energy(self.pair, cfg.taps, channels=3)
        self.centre = cfg.taps // 2
        self.net = None
        if cfg.mode == "refined":
            self.net = refine_nets.build_coring_net(bundle)
            if self.net.taps != cfg.taps:
                raise ConfigError(
                    f"bundle coring net expects {self.net.taps} taps, config has {cfg.taps}"
                )
        per_block = cfg.taps * 3 * cfg.block * cfg.block
        self.chunk = max(1, _CHUNK_ELEMS // per_block)


def _centre_phases(taps):
    # inverse-DFT weights that collapse the temporal-frequency axis onto
    # the centre tap (carrying the 1/T share of the inverse normalization)
    k = np.arange(taps)
    return np.exp(2j * np.pi * k * (taps // 2) / taps) / taps


def _block_pnn(plan, block_vars, lo, hi):
    # expected noise power per spectral bin, one value per block
    if block_vars is None:
        sigma2 = float(plan.cfg.sigma) ** 2
        if sigma2 == 0.0:
            return None  # gains are 1 wherever the spectrum is nonzero
        return np.full(hi - lo, sigma2 * plan.wnorm2)
    return block_vars[lo:hi] * plan.wnorm2


def _classic_frame(plan, buf, cbuf, block_vars):
    cfg = plan.cfg
    b = cfg.block
    w_a, w_s = plan.pair.analysis, plan.pair.synthesis
    phases = _centre_phases(cfg.taps)
    acc = np.zeros((3,) + buf.shape[2:], dtype=np.float64)
    n = plan.oy.size
    for i in range(0, n, plan.chunk):
        oy = plan.oy[i:i + plan.chunk]
        ox = plan.ox[i:i + plan.chunk]
        blk = gather_blocks(buf, oy, ox, b)
        cblk = gather_blocks(cbuf, oy, ox, b) if cbuf is not None else None
        dc = _block_dc(blk, cfg.dc, cblk)
        taper_blocks(blk, dc, w_a)
        spec = sfft.rfftn(blk, axes=(1, 2, 3, 4))
        pnn = _block_pnn(plan, block_vars, i, i + oy.size)
        if pnn is not None:
            core_scale(spec, pnn)
        # collapse the temporal-frequency axis straight onto the centre tap,
        # then invert the remaining colour x space axes
        centre_spec = collapse_centre(spec, phases)
        xc = sfft.irfftn(centre_spec, s=(3, b, b), axes=(1, 2, 3))
        xc += dc[:, None, None, None] * w_a
        xc *= w_s
        scatter_blocks(acc, xc, oy, ox)
    return acc / plan.wmap


def _refined_frame(plan, buf, cbuf, block_vars):
    cfg = plan.cfg
    b = cfg.block
    w_a, w_s = plan.pair.analysis, plan.pair.synthesis
    blk = gather_blocks(buf, plan.oy, plan.ox, b)
    cblk = gather_blocks(cbuf, plan.oy, plan.ox, b) if cbuf is not None else None
    dc = _block_dc(blk, cfg.dc, cblk)
    taper_blocks(blk, dc, w_a)
    spec = sfft.fftn(blk, axes=(1, 2, 3, 4))
    pyy = spec.real ** 2 + spec.imag ** 2
    if block_vars is None:
        pnn = float(cfg.sigma) ** 2 * plan.wnorm2
    else:
        pnn = (block_vars * plan.wnorm2)[:, None, None, None, None]
    _, gains = spectral.core_gains(pyy, pnn)
    gains = refine_nets.refine_gains(
        plan.net, gains, (plan.ys.size, plan.xs.size), clamp=cfg.clamp_gains
    )
    spec *= gains
    # refined gains may break Hermitian symmetry: invert the full complex
    # spectrum and keep the real part of the centre tap
    xc = sfft.ifftn(spec, axes=(1, 2, 3, 4))[:, plan.centre].real
    out = w_s * (xc + dc[:, None, None, None] * w_a)
    acc = np.zeros((3,) + buf.shape[2:], dtype=np.float64)
    scatter_blocks(acc, out, plan.oy, plan.ox)
    return acc / plan.wmap


def _run_frames(frames, worker, threads, on_frame):
    def timed(t):
        start = time.perf_counter()
        result = worker(t)
        if on_frame is not None:
            on_frame(t, time.perf_counter() - start)
        return result

    if threads <= 1:
        return [timed(t) for t in range(frames)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(timed, range(frames)))


def denoise_sequence(seq, cfg, bundle=None, clean=None, threads=1,
                     on_frame=None, sigma_map=None):
    """Run the 4D Wiener pipeline over a [F, 3, H, W] sequence.

    bundle supplies trained windows, the coring net (refined mode), and the
    noise net (blind mode). clean is required for dc="gt". sigma_map, a
    per-pixel STD map applied to every frame, is the seam the blind path
    uses; it can also be passed directly.
    """
    cfg.validate()
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 4 or seq.shape[1] != 3:
        raise ConfigError(f"sequence must be [F, 3, H, W], got {seq.shape}")
    blind = cfg.sigma == "blind"
    if (blind or cfg.mode == "refined" or cfg.window == "trained") and bundle is None:
        raise ConfigError("this configuration requires a weight bundle")
    if cfg.dc == "gt":
        if clean is None:
            raise ConfigError("dc mode 'gt' requires the clean sequence")
        clean = np.asarray(clean, dtype=np.float64)
        if clean.shape != seq.shape:
            raise ConfigError("clean sequence dims must match the input")
    frames, _, height, width = seq.shape
    plan = _FramePlan(cfg, height, width, bundle)
    noise_net = refine_nets.build_noise_net(bundle) if blind else None
    frame_fn = _refined_frame if cfg.mode == "refined" else _classic_frame

    def worker(t):
        buf = build_buffer(seq, t, cfg.taps, cfg.flows)
        cbuf = build_buffer(clean, t, cfg.taps, cfg.flows) if cfg.dc == "gt" else None
        block_vars = None
        if blind:
            smap = refine_nets.estimate_noise_map(noise_net, seq[t])[0]
            block_vars = _footprint_vars(_sq_sat(smap), plan.oy, plan.ox, cfg.block)
        elif sigma_map is not None:
            block_vars = _footprint_vars(_sq_sat(np.asarray(sigma_map, dtype=np.float64)),
                                         plan.oy, plan.ox, cfg.block)
        return frame_fn(plan, buf, cbuf, block_vars)

    return np.stack(_run_frames(frames, worker, threads, on_frame))


def denoise_baseline3d(seq, cfg, threads=1, on_frame=None):
    """Classic 3D grayscale baseline filter.

    Works on BT.601 luma with a half-cosine window (the combined
    analysis*synthesis taper is then the raised cosine, which sums to one
    at the fixed half-block stride), mean DC, and a 3D taps x B x B FFT.
    The luma result is replicated to all three output channels.
    """
    cfg.validate()
    if cfg.sigma == "blind":
        raise ConfigError("the 3D baseline requires a scalar sigma")
    seq = np.asarray(seq, dtype=np.float64)
    gray = luma(seq)[:, None]  # [F, 1, H, W]
    frames, _, height, width = gray.shape
    b = cfg.block
    if b > min(height, width):
        raise ConfigError(f"block {b} exceeds frame size {height}x{width}")
    stride = b // 2
    prof = windows.half_cosine_profile(b)
    win = np.outer(prof, prof)
    ys, xs, oy, ox = _grid(height, width, b, stride)
    wmap = np.zeros((height, width), dtype=np.float64)
    win2 = win * win
    for y in ys:
        for x in xs:
            wmap[y:y + b, x:x + b] += win2
    wnorm2 = cfg.taps * float(np.sum(win ** 2))
    pnn = float(cfg.sigma) ** 2 * wnorm2
    centre = cfg.taps // 2
    chunk = max(1, _CHUNK_ELEMS // (cfg.taps * b * b))

    phases = _centre_phases(cfg.taps)

    def worker(t):
        buf = build_buffer(gray, t, cfg.taps, cfg.flows)[:, 0]  # [T, H, W]
        acc = np.zeros((1, height, width), dtype=np.float64)
        for i in range(0, oy.size, chunk):
            cy, cx = oy[i:i + chunk], ox[i:i + chunk]
            blk = np.ascontiguousarray(gather_blocks(buf[:, None], cy, cx, b)[:, :, 0])
            dc = blk.reshape(blk.shape[0], -1).mean(axis=1)
            taper_blocks(blk, dc, win)
            spec = sfft.rfftn(blk, axes=(1, 2, 3))
            if pnn > 0.0:
                core_scale(spec, np.full(cy.size, pnn))
            centre_spec = collapse_centre(spec, phases)
            xc = sfft.irfftn(centre_spec, s=(b, b), axes=(1, 2))
            xc += dc[:, None, None] * win
            xc *= win
            scatter_blocks(acc, xc[:, None], cy, cx)
        return acc[0] / wmap

    results = _run_frames(frames, worker, threads, on_frame)
    return np.repeat(np.stack(results)[:, None], 3, axis=1)


def denoise_multiscale(seq, cfg, weights=None, bundle=None, clean=None,
                       threads=1, on_frame=None):
    """Weighted per-pixel average of single-scale outputs over cfg.scales."""
    cfg.validate()
    if len(cfg.scales) < 2:
        raise ConfigError("multi-scale averaging needs at least 2 scales")
    if weights is None:
        weights = np.full(len(cfg.scales), 1.0 / len(cfg.scales))
    weights = np.asarray(weights, dtype=np.float64)
    if weights.size != len(cfg.scales):
        raise ConfigError(
            f"{weights.size} weights for {len(cfg.scales)} scales"
        )
    if abs(float(weights.sum()) - 1.0) > 1e-9:
        raise ConfigError(f"scale weights must sum to 1, got {weights.sum()}")
    out = None
    for w, scale in zip(weights, cfg.scales):
        sub = replace(cfg, block=scale, scales=())
        part = denoise_sequence(seq, sub, bundle=bundle, clean=clean,
                                threads=threads, on_frame=on_frame)
        out = w * part if out is None else out + w * part
    return out
