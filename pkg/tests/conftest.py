"""Shared fixtures: deterministic synthetic clips for trend tests."""

import numpy as np
import pytest


def smooth2d(field, sigma):
    """Separable Gaussian blur over the trailing two axes (wrap padding)."""
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
    """Deterministic 8-bit clip: a moving full-range diagonal gradient plus
    translating smooth colour texture. Spans [0, 255] so clipped noise bites
    in the dark and bright regions."""
    rng = np.random.default_rng(seed)
    pad = 2 * frames + 4
    field = smooth2d(rng.normal(0.0, 1.0, (3, height + pad, width + pad)), 2.0)
    field /= field.std()
    out = np.empty((frames, 3, height, width))
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    for t in range(frames):
        base = 127.5 + 118.0 * np.sin(2.0 * np.pi * (xx + yy - 6.0 * t) / 96.0)
        tex = 24.0 * field[:, 2 * t:2 * t + height, t:t + width]
        out[t] = base[None] + tex
    return np.floor(np.clip(out, 0.0, 255.0) + 0.5)


@pytest.fixture(scope="session")
def desk_clip():
    return make_desk_clip()


@pytest.fixture(scope="session")
def small_clip():
    """3 frames of 64x64 desk-style content for fast engine tests."""
    return make_desk_clip(frames=3, height=64, width=64, seed=77)
