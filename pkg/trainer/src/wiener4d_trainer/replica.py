"""Differentiable torch replica of the block-Wiener denoising pipeline.

Mirrors the inference engine step for step: clamped block grid, scalar DC
offset via the interpolating median, analysis taper, FFT over
taps x colour x space, cored gains (optionally refined by a CoringNetTorch),
inverse FFT, and overlap-add of w_s * (x_hat + w_a * dc) normalized by the
accumulated w_s * w_a map. Returns all temporal taps so both the
centre-frame and whole-sequence losses can be formed.
"""

import numpy as np
import torch

EPS = 1e-12


def block_grid(extent, block, stride):
    last = extent - block
    pos = list(range(0, last + 1, stride))
    if pos[-1] != last:
        pos.append(last)
    return pos


class WienerReplica(torch.nn.Module):
    def __init__(self, height, width, block=16, stride_div=3, taps=5,
                 analysis=None, synthesis=None, coring_net=None):
        super().__init__()
        self.block = block
        self.taps = taps
        self.height = height
        self.width = width
        stride = max(1, block // stride_div)
        ys = block_grid(height, block, stride)
        xs = block_grid(width, block, stride)
        self.grid = (len(ys), len(xs))
        oy = np.repeat(ys, len(xs))
        ox = np.tile(xs, len(ys))
        b = np.arange(block)
        rows = oy[:, None] + b[None, :]              # [N, B]
        cols = ox[:, None] + b[None, :]
        self.register_buffer("rows", torch.from_numpy(rows)[:, :, None])
        self.register_buffer("cols", torch.from_numpy(cols)[:, None, :])
        # flat scatter indices for one [C, H, W] plane per block
        pix = rows[:, :, None] * width + cols[:, None, :]     # [N, B, B]
        chan = np.arange(3)[None, :, None, None] * (height * width)
        flat = (pix[:, None] + chan).reshape(-1)              # [N*3*B*B]
        self.register_buffer("flat_idx", torch.from_numpy(flat))
        self.register_buffer("pix_idx", torch.from_numpy(pix.reshape(-1)))
        self.analysis = analysis
        self.synthesis = synthesis
        self.coring_net = coring_net

    def window_energy(self, w_a):
        return self.taps * 3 * (w_a ** 2).sum()

    def gather(self, buf):
        # buf: [T, C, H, W] -> [N, T, C, B, B]
        return buf[:, :, self.rows, self.cols].permute(2, 0, 1, 3, 4)

    def block_noise_power(self, w_a, sigma=None, noise_map=None):
        """Per-block Pnn: sigma is a scalar, or noise_map is [H, W]."""
        energy = self.window_energy(w_a)
        if noise_map is None:
            return torch.as_tensor(float(sigma) ** 2) * energy
        blocks = (noise_map ** 2)[self.rows, self.cols]       # [N, B, B]
        return blocks.mean(dim=(1, 2)) * energy

    def forward(self, noisy, sigma=None, noise_map=None):
        """noisy: [T, C, H, W] buffer -> denoised taps [T, C, H, W]."""
        w_a = self.analysis()
        w_s = self.synthesis()
        blocks = self.gather(noisy)                           # [N,T,C,B,B]
        n = blocks.shape[0]
        dc = torch.quantile(blocks.reshape(n, -1), 0.5, dim=1)
        tapered = (blocks - dc[:, None, None, None, None]) * w_a
        spec = torch.fft.fftn(tapered, dim=(1, 2, 3, 4))
        pyy = spec.real ** 2 + spec.imag ** 2
        pnn = self.block_noise_power(w_a, sigma, noise_map)
        if pnn.ndim == 1:
            pnn = pnn[:, None, None, None, None]
        gains = torch.relu(pyy - pnn) / (pyy + EPS)
        if self.coring_net is not None:
            gains = self.coring_net(gains, self.grid)
        filtered = torch.fft.ifftn(spec * gains, dim=(1, 2, 3, 4)).real
        payload = w_s * (filtered + (dc[:, None, None, None, None] * w_a))
        out = payload.new_zeros(self.taps, 3 * self.height * self.width)
        for t in range(self.taps):
            out[t] = out[t].index_add(0, self.flat_idx, payload[:, t].reshape(-1))
        wmap = payload.new_zeros(self.height * self.width)
        prod = (w_s * w_a).reshape(-1).repeat(n)
        wmap = wmap.index_add(0, self.pix_idx, prod)
        frames = out.reshape(self.taps, 3, self.height, self.width)
        return frames / wmap.reshape(1, 1, self.height, self.width)
