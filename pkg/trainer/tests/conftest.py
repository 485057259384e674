"""Fixtures: training clip directories and the held-out desk clip."""

import numpy as np
import pytest

from wiener4d_trainer import synthetic_clip, write_raw_sequence


def _smooth2d(field, sigma):
    # separable Gaussian blur, wrap padding (matches the denoiser's fixture)
    r = int(3 * sigma)
    taps = np.exp(-0.5 * (np.arange(-r, r + 1) / sigma) ** 2)
    taps /= taps.sum()
    pad = [(0, 0)] * (field.ndim - 2) + [(r, r), (r, r)]
    fp = np.pad(field, pad, mode="wrap")
    h, w = field.shape[-2:]
    rows = np.zeros(field.shape[:-2] + (h, w + 2 * r))
    for i in range(2 * r + 1):
        rows += taps[i] * fp[..., i:i + h, :]
    out = np.zeros(field.shape)
    for i in range(2 * r + 1):
        out += taps[i] * rows[..., :, i:i + w]
    return out


def make_desk_clip(frames=10, height=128, width=128, seed=1234):
    """Same deterministic held-out clip the denoiser acceptance uses."""
    rng = np.random.default_rng(seed)
    pad = 2 * frames + 4
    field = _smooth2d(rng.normal(0.0, 1.0, (3, height + pad, width + pad)), 2.0)
    field /= field.std()
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    out = np.empty((frames, 3, height, width))
    for t in range(frames):
        base = 127.5 + 118.0 * np.sin(2.0 * np.pi * (xx + yy - 6.0 * t) / 96.0)
        out[t] = base[None] + 24.0 * field[:, 2 * t:2 * t + height, t:t + width]
    return np.floor(np.clip(out, 0.0, 255.0) + 0.5)


@pytest.fixture(scope="session")
def desk_clip():
    return make_desk_clip()


@pytest.fixture(scope="session")
def textured_clip_dir(tmp_path_factory):
    """8 textured training clips (the coring overfit set)."""
    d = tmp_path_factory.mktemp("clips")
    for i in range(8):
        write_raw_sequence(
            synthetic_clip(frames=6, height=48, width=48, seed=100 + i),
            d / f"clip{i}.v4ds",
        )
    return d


@pytest.fixture(scope="session")
def blind_clip_dir(tmp_path_factory):
    """4 textured + 4 flat clips for blind-noise training."""
    d = tmp_path_factory.mktemp("blind_clips")
    for i in range(4):
        write_raw_sequence(
            synthetic_clip(frames=6, height=48, width=48, seed=200 + i),
            d / f"clip{i}.v4ds",
        )
    for j, level in enumerate((50, 110, 170, 230)):
        write_raw_sequence(
            synthetic_clip(frames=6, height=48, width=48, flat=level),
            d / f"flat{j}.v4ds",
        )
    return d
