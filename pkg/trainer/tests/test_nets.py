import numpy as np
import torch

from wiener4d_trainer import export
from wiener4d_trainer.nets import (
    CoringNetTorch,
    IsotropicWindow,
    NoiseNetTorch,
    TrainableWindow,
    gaussian_window,
)

from wiener4d import refine_nets as primary_nets


class TestCoringNetTorch:
    def test_layer_layout(self):
        net = CoringNetTorch()
        assert len(net.stage1) == 6 and len(net.stage2) == 5
        assert all(c.bias is None for c in list(net.stage1) + list(net.stage2))
        params = sum(p.numel() for p in net.parameters())
        assert params == 324_000

    def test_identity_init_passthrough(self):
        net = CoringNetTorch().init_identity_()
        gains = torch.rand(12, 5, 3, 8, 8)
        out = net(gains, (3, 4))
        assert torch.abs(out - gains).max() < 1e-5

    def test_matches_primary_inference(self):
        # the cross-implementation oracle at module level
        torch.manual_seed(0)
        net = CoringNetTorch().init_identity_(noise=0.05).double()
        bundle = export.coring_entries(net)
        primary = primary_nets.build_coring_net(bundle)
        rng = np.random.default_rng(1)
        gains = rng.uniform(0.0, 1.0, size=(12, 5, 3, 8, 8))
        ours = net(torch.from_numpy(gains), (3, 4)).detach().numpy()
        theirs = primary_nets.refine_gains(primary, gains, (3, 4))
        assert np.abs(ours - theirs).max() < 1e-4


class TestNoiseNetTorch:
    def test_param_count(self):
        net = NoiseNetTorch()
        assert sum(p.numel() for p in net.parameters()) == 7_920

    def test_nonnegative(self):
        torch.manual_seed(1)
        net = NoiseNetTorch()
        out = net(torch.randn(2, 3, 16, 16) * 100)
        assert out.min() >= 0.0
        assert out.shape == (2, 1, 16, 16)

    def test_matches_primary_inference(self):
        torch.manual_seed(2)
        net = NoiseNetTorch().double()
        bundle = export.noise_entries(net)
        primary = primary_nets.build_noise_net(bundle)
        rng = np.random.default_rng(3)
        frame = rng.uniform(0.0, 255.0, size=(3, 24, 24))
        ours = net(torch.from_numpy(frame)[None])[0].detach().numpy()
        theirs = primary_nets.estimate_noise_map(primary, frame)
        assert np.abs(ours - theirs).max() < 1e-4


class TestWindows:
    def test_trainable_init_is_gaussian(self):
        win = TrainableWindow(16)
        assert np.abs(win().detach().numpy() - gaussian_window(16)).max() < 1e-6

    def test_isotropic_init_close_to_gaussian(self):
        win = IsotropicWindow(16)
        got = win().detach().numpy()
        # radial linear interpolation of the same profile
        assert np.abs(got - gaussian_window(16)).max() < 0.02
        assert got.max() <= 1.0 + 1e-6

    def test_isotropic_is_radially_symmetric(self):
        win = IsotropicWindow(16)()
        got = win.detach().numpy()
        assert np.allclose(got, np.rot90(got, 2), atol=1e-6)
        assert np.allclose(got, got.T, atol=1e-6)

    def test_windows_stay_positive(self):
        win = TrainableWindow(8)
        with torch.no_grad():
            win.raw -= 2.0  # push raw weights negative
        assert win().min() >= 1e-4
