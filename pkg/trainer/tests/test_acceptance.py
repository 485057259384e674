"""Trainer acceptance: criteria 13-15, one PASS/FAIL line each.

Run with: pytest tests/test_acceptance.py -v -s
(Training smoke runs take a few minutes on CPU.)
"""

import subprocess
import sys

import numpy as np
import torch

import wiener4d as w
from wiener4d_trainer import TrainConfig, export, train_blind, train_coring
from wiener4d_trainer.nets import CoringNetTorch, NoiseNetTorch

torch.set_num_threads(2)


def report(num, desc, ok, detail=""):
    mark = "PASS" if ok else "FAIL"
    print(f"[{mark}] criterion {num}: {desc} {detail}".rstrip())
    assert ok, f"criterion {num}: {desc} {detail}"


def test_criterion_13_training_smoke(textured_clip_dir, desk_clip, tmp_path):
    cfg = TrainConfig(clip_dir=textured_clip_dir, crop=(5, 26, 26), sigma=20.0,
                      epochs=50, resample=False, seed=1, restart_period=50)
    result = train_coring(cfg)
    ratio = result.losses[-1] / result.losses[0]

    bundle_path = tmp_path / "coring.w4dw"
    export.save_w4dw(result.bundle, bundle_path)
    bundle = w.load_weights(bundle_path)

    held_out = desk_clip[:5]
    noisy = w.add_awgn(held_out, w.NoiseModel(20.0, seed=7))
    classic = w.psnr(held_out, w.denoise_sequence(
        noisy, w.EngineConfig(sigma=20.0), threads=2))[1]
    refined = w.psnr(held_out, w.denoise_sequence(
        noisy, w.EngineConfig(sigma=20.0, mode="refined"), bundle=bundle,
        threads=2))[1]

    # wiring through the shipped CLI on a tiny clip
    tiny = held_out[:3, :, :48, :48]
    w.write_sequence(w.add_awgn(tiny, w.NoiseModel(20.0, seed=8)),
                     tmp_path / "tiny.v4ds")
    proc = subprocess.run(
        [sys.executable, "-m", "wiener4d.cli", "denoise",
         "--in", str(tmp_path / "tiny.v4ds"), "--out", str(tmp_path / "out.v4ds"),
         "--sigma", "20", "--mode", "refined", "--weights", str(bundle_path)],
        capture_output=True, text=True)
    cli_ok = proc.returncode == 0
    if cli_ok:
        cli_out = w.read_sequence(tmp_path / "out.v4ds")
        classic_out = w.denoise_sequence(
            w.read_sequence(tmp_path / "tiny.v4ds"), w.EngineConfig(sigma=20.0))
        cli_ok = not np.allclose(cli_out, classic_out, atol=1e-3)

    ok = ratio <= 0.5 and refined >= classic and cli_ok
    report(13, "coring overfit halves loss; exported bundle beats classic", ok,
           f"(loss {result.losses[0]:.2f}->{result.losses[-1]:.2f} ratio {ratio:.2f}; "
           f"desk classic {classic:.2f} dB, refined {refined:.2f} dB; cli {cli_ok})")


def test_criterion_14_blind_estimation(blind_clip_dir, desk_clip):
    cfg = TrainConfig(clip_dir=blind_clip_dir, crop=(5, 26, 26), epochs=62,
                      seed=2, restart_period=60, lambda_noise=4.0,
                      lambda_centre=0.05, lambda_seq=0.05,
                      sigmas=(0.0, 10.0, 20.0, 30.0, 40.0, 50.0))
    result = train_blind(cfg, stage_split=0.97)
    net = w.build_noise_net(result.bundle)

    ratios = {}
    for sigma in (10.0, 30.0, 50.0):
        flat = np.full((3, 64, 64), 128.0)
        noisy = np.clip(
            flat + sigma * np.random.default_rng(5).standard_normal(flat.shape),
            0.0, 255.0)
        ratios[sigma] = float(w.estimate_noise_map(net, noisy).mean()) / sigma
    calib_ok = all(0.8 <= r <= 1.2 for r in ratios.values())
    nonneg_ok = w.estimate_noise_map(
        net, np.random.default_rng(6).uniform(0, 255, (3, 32, 32))).min() >= 0.0

    noisy = w.add_awgn(desk_clip, w.NoiseModel(30.0, seed=7))
    nb = w.psnr(desk_clip, w.denoise_sequence(
        noisy, w.EngineConfig(sigma=30.0), threads=2))[1]
    bl = w.psnr(desk_clip, w.denoise_sequence(
        noisy, w.EngineConfig(sigma="blind"), bundle=result.bundle, threads=2))[1]
    diff = abs(nb - bl)

    ok = calib_ok and nonneg_ok and diff <= 1.0
    report(14, "noise map within 20% on flat gray; blind within 1 dB", ok,
           f"(ratios { {int(k): round(v, 3) for k, v in ratios.items()} }; "
           f"non-blind {nb:.2f} dB, blind {bl:.2f} dB, diff {diff:.2f})")


def test_criterion_15_cross_implementation_oracle():
    rng = np.random.default_rng(42)
    worst_coring = worst_noise = 0.0
    for trial in range(20):
        torch.manual_seed(trial)
        net = CoringNetTorch().init_identity_(noise=0.05).double()
        primary = w.build_coring_net(export.coring_entries(net))
        gains = rng.uniform(0.0, 1.0, size=(6, 5, 3, 8, 8))
        ours = net(torch.from_numpy(gains), (2, 3)).detach().numpy()
        theirs = w.refine_gains(primary, gains, (2, 3))
        worst_coring = max(worst_coring, float(np.abs(ours - theirs).max()))

        nnet = NoiseNetTorch().double()
        nprimary = w.build_noise_net(export.noise_entries(nnet))
        frame = rng.uniform(0.0, 255.0, size=(3, 20, 20))
        ours_map = nnet(torch.from_numpy(frame)[None])[0].detach().numpy()
        theirs_map = w.estimate_noise_map(nprimary, frame)
        worst_noise = max(worst_noise, float(np.abs(ours_map - theirs_map).max()))
    ok = worst_coring < 1e-4 and worst_noise < 1e-4
    report(15, "trainer forward matches engine inference on 20 random inputs", ok,
           f"(coring max err {worst_coring:.2e}, noise max err {worst_noise:.2e})")
