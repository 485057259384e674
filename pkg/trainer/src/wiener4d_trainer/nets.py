"""Torch modules mirroring the denoiser's auxiliary networks and windows.

Layer layouts, activations, and rearranges match the inference engine
exactly so exported weights are drop-in: two conv3d stages of 6 + 5
bias-free layers at width 40 (no activation on each stage's last layer),
and a 4-layer bias-free conv2d noise net with |.| on the output.
"""

import numpy as np
import torch
from einops import rearrange
from torch import nn

LEAKY_SLOPE = 0.1
WIDTH = 40


def _conv3d_chain(channels):
    return nn.ModuleList(
        nn.Conv3d(cin, cout, 3, padding=1, bias=False)
        for cin, cout in zip(channels[:-1], channels[1:])
    )


class CoringNetTorch(nn.Module):
    def __init__(self, taps=5, width=WIDTH):
        super().__init__()
        self.taps = taps
        chain1 = [taps] + [width] * 5 + [taps]
        chain2 = [taps] + [width] * 4 + [taps]
        self.stage1 = _conv3d_chain(chain1)
        self.stage2 = _conv3d_chain(chain2)
        self.act = nn.LeakyReLU(LEAKY_SLOPE)

    def init_identity_(self, noise=0.0, generator=None):
        """Delta-kernel passthrough plus optional Gaussian perturbation."""
        for stage in (self.stage1, self.stage2):
            for conv in stage:
                w = torch.zeros_like(conv.weight)
                cout, cin = w.shape[:2]
                for j in range(min(cout, cin)):
                    w[j, j, 1, 1, 1] = 1.0
                if noise > 0.0:
                    w += noise * torch.randn(w.shape, generator=generator)
                with torch.no_grad():
                    conv.weight.copy_(w)
        return self

    def _run(self, stage, x):
        for i, conv in enumerate(stage):
            x = conv(x)
            if i < len(stage) - 1:
                x = self.act(x)
        return x

    def forward(self, gains, grid):
        # gains: [N, T, C, B, B] with N = grid[0] * grid[1], row-major
        gh, gw = grid
        x = self._run(self.stage1, gains)
        x = rearrange(x, "(gh gw) t c bh bw -> (bh bw) t c gh gw", gh=gh, gw=gw)
        x = self._run(self.stage2, x)
        bh, bw = gains.shape[3], gains.shape[4]
        return rearrange(x, "(bh bw) t c gh gw -> (gh gw) t c bh bw", bh=bh, bw=bw)


class NoiseNetTorch(nn.Module):
    def __init__(self):
        super().__init__()
        channels = (3, 20, 20, 20, 1)
        self.layers = nn.ModuleList(
            nn.Conv2d(cin, cout, 3, padding=1, bias=False)
            for cin, cout in zip(channels[:-1], channels[1:])
        )
        self.act = nn.LeakyReLU(LEAKY_SLOPE)

    def forward(self, frame):
        # frame: [N, 3, H, W] -> nonnegative STD map [N, 1, H, W]
        x = frame
        for i, conv in enumerate(self.layers):
            x = conv(x)
            if i < len(self.layers) - 1:
                x = self.act(x)
        return x.abs()


def gaussian_window(block, alpha=None):
    if alpha is None:
        alpha = 8.0 / (block * block)
    centre = (block - 1) / 2.0
    d = np.arange(block, dtype=np.float64) - centre
    r2 = d[:, None] ** 2 + d[None, :] ** 2
    win = np.exp(-alpha * r2)
    return win / win.max()


class TrainableWindow(nn.Module):
    """Full B x B trainable taper initialized to a Gaussian."""

    def __init__(self, block, alpha=None):
        super().__init__()
        self.block = block
        init = torch.from_numpy(gaussian_window(block, alpha)).float()
        self.raw = nn.Parameter(init)

    def forward(self):
        return self.raw.clamp(min=1e-4)


class IsotropicWindow(nn.Module):
    """1-D radial profile, linearly interpolated onto the 2-D block."""

    def __init__(self, block, alpha=None, taps=None):
        super().__init__()
        self.block = block
        if alpha is None:
            alpha = 8.0 / (block * block)
        centre = (block - 1) / 2.0
        d = np.arange(block, dtype=np.float64) - centre
        radius = np.sqrt(d[:, None] ** 2 + d[None, :] ** 2)
        taps = taps or block
        self.rmax = float(radius.max())
        grid = np.linspace(0.0, self.rmax, taps)
        init = np.exp(-alpha * grid ** 2)
        self.raw = nn.Parameter(torch.from_numpy(init).float())
        # precomputed interpolation coordinates for every block entry
        pos = radius / self.rmax * (taps - 1)
        i0 = np.minimum(pos.astype(np.int64), taps - 2)
        self.register_buffer("i0", torch.from_numpy(i0))
        self.register_buffer("frac", torch.from_numpy(pos - i0).float())

    def forward(self):
        prof = self.raw.clamp(min=1e-4)
        flat0 = prof[self.i0.reshape(-1)]
        flat1 = prof[(self.i0 + 1).reshape(-1)]
        f = self.frac.reshape(-1)
        return (flat0 * (1.0 - f) + flat1 * f).reshape(self.block, self.block)


class FixedWindow(nn.Module):
    def __init__(self, win):
        super().__init__()
        self.register_buffer("win", torch.as_tensor(np.asarray(win), dtype=torch.float32))

    def forward(self):
        return self.win
