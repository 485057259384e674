import numpy as np
import torch

import wiener4d as w
from wiener4d_trainer import WienerReplica, synthetic_clip
from wiener4d_trainer.nets import CoringNetTorch, FixedWindow, gaussian_window


def make_replica(h, wd, coring_net=None, block=16):
    win = gaussian_window(block)
    return WienerReplica(h, wd, block, 3, 5, analysis=FixedWindow(win),
                         synthesis=FixedWindow(win), coring_net=coring_net)


class TestReplicaMatchesEngine:
    def test_classic_centre_tap(self):
        clip = synthetic_clip(frames=5, height=48, width=48, seed=3)
        noisy = w.add_awgn(clip, w.NoiseModel(20.0, seed=1))
        primary = w.denoise_sequence(noisy, w.EngineConfig(sigma=20.0))
        rep = make_replica(48, 48)
        out = rep(torch.from_numpy(noisy).float(), sigma=20.0)
        # float32 replica vs float64 engine
        assert np.abs(out[2].numpy() - primary[2]).max() < 5e-3

    def test_sigma_zero_identity(self):
        clip = synthetic_clip(frames=5, height=32, width=32, seed=4)
        rep = make_replica(32, 32)
        out = rep(torch.from_numpy(clip).float(), sigma=0.0)
        assert np.abs(out.numpy() - clip).max() < 5e-3

    def test_refined_with_identity_net_matches_classic(self):
        clip = synthetic_clip(frames=5, height=32, width=32, seed=5)
        noisy = torch.from_numpy(w.add_awgn(clip, w.NoiseModel(15.0, seed=2))).float()
        classic = make_replica(32, 32)(noisy, sigma=15.0)
        net = CoringNetTorch().init_identity_()
        refined = make_replica(32, 32, coring_net=net)(noisy, sigma=15.0)
        assert torch.abs(refined - classic).max() < 1e-3

    def test_constant_noise_map_matches_scalar(self):
        clip = synthetic_clip(frames=5, height=32, width=32, seed=6)
        noisy = torch.from_numpy(w.add_awgn(clip, w.NoiseModel(20.0, seed=3))).float()
        rep = make_replica(32, 32)
        a = rep(noisy, sigma=20.0)
        b = rep(noisy, noise_map=torch.full((32, 32), 20.0))
        assert torch.abs(a - b).max() < 1e-3

    def test_gradients_flow_to_noise_map(self):
        clip = synthetic_clip(frames=5, height=32, width=32, seed=7)
        noisy = torch.from_numpy(w.add_awgn(clip, w.NoiseModel(20.0, seed=4))).float()
        nmap = torch.full((32, 32), 20.0, requires_grad=True)
        out = make_replica(32, 32)(noisy, noise_map=nmap)
        out.abs().mean().backward()
        assert nmap.grad is not None
        assert torch.isfinite(nmap.grad).all()
        assert float(nmap.grad.abs().sum()) > 0.0

    def test_gradients_flow_to_net(self):
        clip = synthetic_clip(frames=5, height=32, width=32, seed=8)
        noisy = torch.from_numpy(w.add_awgn(clip, w.NoiseModel(20.0, seed=5))).float()
        net = CoringNetTorch().init_identity_(noise=0.01)
        out = make_replica(32, 32, coring_net=net)(noisy, sigma=20.0)
        out.abs().mean().backward()
        grads = [p.grad for p in net.parameters()]
        assert all(g is not None and torch.isfinite(g).all() for g in grads)
