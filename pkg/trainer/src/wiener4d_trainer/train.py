"""Training loops: coring refinement, blind noise estimation, windows.

All three drive the differentiable Wiener replica with AdamW and a
cosine-annealing warm-restart schedule (1e-3 down to 1e-5 per restart
period). Losses follow the weighted-L1 scheme: centre frame plus whole
5-frame sequence; the blind run adds an L1 between the predicted noise
map and the uniform ground-truth level in its first stage and drops to
the target-frame loss alone in the second.
"""

from typing import NamedTuple

import numpy as np
import torch

from . import export
from .data import TrainConfig, load_clips, random_crop
from .nets import (
    CoringNetTorch,
    FixedWindow,
    IsotropicWindow,
    NoiseNetTorch,
    TrainableWindow,
    gaussian_window,
)
from .replica import WienerReplica


class TrainResult(NamedTuple):
    bundle: dict
    losses: list


def _make_optim(params, cfg):
    opt = torch.optim.AdamW(params, lr=cfg.lr, weight_decay=cfg.weight_decay)
    sched = torch.optim.lr_scheduler.CosineAnnealingWarmRestarts(
        opt, T_0=max(1, cfg.restart_period), eta_min=cfg.eta_min
    )
    return opt, sched


def _noisy_pair(crop, sigma, rng):
    clean = torch.from_numpy(np.ascontiguousarray(crop)).float()
    noise = sigma * rng.standard_normal(crop.shape)
    noisy = torch.from_numpy(np.clip(crop + noise, 0.0, 255.0)).float()
    return noisy, clean


def _check_finite(loss):
    if not torch.isfinite(loss):
        raise RuntimeError("training diverged: non-finite loss")


def _fixed_windows(cfg):
    win = gaussian_window(cfg.block)
    return FixedWindow(win), FixedWindow(win)


def _epoch_crops(cfg, clips, rng):
    return [random_crop(clip, cfg.crop, rng) for clip in clips]


def train_coring(cfg: TrainConfig) -> TrainResult:
    """Train the two-stage coring net at a single noise level."""
    cfg.validate()
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    clips = load_clips(cfg.clip_dir)
    net = CoringNetTorch(taps=cfg.crop[0]).init_identity_(noise=0.02)
    w_a, w_s = _fixed_windows(cfg)
    replica = WienerReplica(cfg.crop[1], cfg.crop[2], cfg.block, cfg.stride_div,
                            cfg.crop[0], analysis=w_a, synthesis=w_s,
                            coring_net=net)
    opt, sched = _make_optim(net.parameters(), cfg)
    fixed = None if cfg.resample else [
        _noisy_pair(c, cfg.sigma, rng) for c in _epoch_crops(cfg, clips, rng)
    ]
    centre = cfg.crop[0] // 2
    losses = []
    for epoch in range(cfg.epochs):
        if fixed is not None:
            pairs = fixed
        else:
            pairs = [_noisy_pair(c, cfg.sigma, rng)
                     for c in _epoch_crops(cfg, clips, rng)]
        total = 0.0
        for i, (noisy, clean) in enumerate(pairs):
            out = replica(noisy, sigma=cfg.sigma)
            loss = (cfg.lambda_centre * (out[centre] - clean[centre]).abs().mean()
                    + cfg.lambda_seq * (out - clean).abs().mean())
            _check_finite(loss)
            opt.zero_grad()
            loss.backward()
            opt.step()
            sched.step(epoch + (i + 1) / len(pairs))
            total += float(loss.detach())
        losses.append(total / len(pairs))
    bundle = export.coring_entries(net) | export.metadata_entries(cfg)
    return TrainResult(bundle, losses)


def train_blind(cfg: TrainConfig, coring_bundle=None, stage_split=0.5) -> TrainResult:
    """Two-stage blind-noise training over the combined sigma levels.

    Stage A supervises the map against the uniform ground-truth level on
    top of the denoising losses; stage B keeps only the target-frame loss.
    The export carries identity coring tensors unless a trained coring
    bundle is supplied, so the result drives blind or blind+refined runs.
    """
    cfg.validate()
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    clips = load_clips(cfg.clip_dir)
    net = NoiseNetTorch()
    w_a, w_s = _fixed_windows(cfg)
    replica = WienerReplica(cfg.crop[1], cfg.crop[2], cfg.block, cfg.stride_div,
                            cfg.crop[0], analysis=w_a, synthesis=w_s)
    opt, sched = _make_optim(net.parameters(), cfg)
    centre = cfg.crop[0] // 2
    stage_a = max(1, int(cfg.epochs * stage_split))
    losses = []
    for epoch in range(cfg.epochs):
        if epoch == stage_a:
            # stage B: drop the map supervision and fine-tune gently so the
            # calibration learned in stage A survives
            opt = torch.optim.AdamW(net.parameters(),
                                    lr=cfg.lr * cfg.stage_b_lr_scale,
                                    weight_decay=cfg.weight_decay)
            sched = None
        pairs = [(c, float(rng.choice(cfg.sigmas)))
                 for c in _epoch_crops(cfg, clips, rng)]
        total = 0.0
        for i, (crop, sigma) in enumerate(pairs):
            noisy, clean = _noisy_pair(crop, sigma, rng)
            noise_map = net(noisy[centre][None])[0, 0]
            out = replica(noisy, noise_map=noise_map)
            centre_l1 = (out[centre] - clean[centre]).abs().mean()
            if epoch < stage_a:
                loss = (cfg.lambda_centre * centre_l1
                        + cfg.lambda_seq * (out - clean).abs().mean()
                        + cfg.lambda_noise * (noise_map - sigma).abs().mean())
            else:
                loss = centre_l1
            _check_finite(loss)
            opt.zero_grad()
            loss.backward()
            opt.step()
            if sched is not None:
                sched.step(epoch + (i + 1) / len(pairs))
            total += float(loss.detach())
        losses.append(total / len(pairs))
    if coring_bundle is None:
        coring_bundle = export.coring_entries(
            CoringNetTorch(taps=cfg.crop[0]).init_identity_()
        )
    bundle = dict(coring_bundle) | export.noise_entries(net) \
        | export.metadata_entries(cfg)
    return TrainResult(bundle, losses)


def train_windows(cfg: TrainConfig, init="gaussian") -> TrainResult:
    """Train analysis/synthesis windows through the classic pipeline."""
    cfg.validate()
    torch.manual_seed(cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    if init == "gaussian":
        w_a, w_s = TrainableWindow(cfg.block), TrainableWindow(cfg.block)
    elif init == "isotropic-1d":
        w_a, w_s = IsotropicWindow(cfg.block), IsotropicWindow(cfg.block)
    else:
        raise ValueError(f"unknown window init {init!r}")
    replica = WienerReplica(cfg.crop[1], cfg.crop[2], cfg.block, cfg.stride_div,
                            cfg.crop[0], analysis=w_a, synthesis=w_s)
    params = list(w_a.parameters()) + list(w_s.parameters())
    opt, sched = _make_optim(params, cfg)
    centre = cfg.crop[0] // 2
    losses = []
    if cfg.epochs > 0:
        clips = load_clips(cfg.clip_dir)
        for epoch in range(cfg.epochs):
            total = 0.0
            pairs = [_noisy_pair(c, cfg.sigma, rng)
                     for c in _epoch_crops(cfg, clips, rng)]
            for i, (noisy, clean) in enumerate(pairs):
                out = replica(noisy, sigma=cfg.sigma)
                loss = (cfg.lambda_centre * (out[centre] - clean[centre]).abs().mean()
                        + cfg.lambda_seq * (out - clean).abs().mean())
                _check_finite(loss)
                opt.zero_grad()
                loss.backward()
                opt.step()
                sched.step(epoch + (i + 1) / len(pairs))
                total += float(loss.detach())
            losses.append(total / len(pairs))
    bundle = export.window_entries(w_a, w_s) | export.metadata_entries(cfg)
    return TrainResult(bundle, losses)
