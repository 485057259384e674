"""Training data: raw-sequence loading and random spatiotemporal crops.

The trainer exchanges data with the denoiser through its file formats
only, so the raw reader here is an independent implementation of the
V4DS layout (magic, version u32, F C H W u32, dtype u8, payload).
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

RAW_MAGIC = b"V4DS"


@dataclass
class TrainConfig:
    clip_dir: str | Path = "clips"
    crop: tuple = (5, 128, 128)          # taps x height x width
    sigmas: tuple = (10.0, 20.0, 30.0, 40.0, 50.0)
    sigma: float = 20.0                  # active level for non-blind runs
    lambda_centre: float = 0.5
    lambda_seq: float = 0.5
    lambda_noise: float = 1.0
    lr: float = 1e-3
    eta_min: float = 1e-5
    restart_period: int = 300
    epochs: int = 1200
    block: int = 16
    stride_div: int = 3
    window: str = "gaussian"
    seed: int = 0
    resample: bool = True                # fresh crops/noise each epoch
    weight_decay: float = 0.0
    stage_b_lr_scale: float = 0.002      # blind stage-B fine-tune rate factor

    def validate(self):
        taps, h, w = self.crop
        if taps % 2 == 0 or taps < 1:
            raise ValueError(f"crop taps must be odd, got {taps}")
        if min(h, w) < self.block:
            raise ValueError(f"crop {h}x{w} smaller than block {self.block}")
        for lam in (self.lambda_centre, self.lambda_seq, self.lambda_noise):
            if lam < 0:
                raise ValueError("loss weights must be >= 0")


def read_raw_sequence(path):
    """Parse a V4DS file into [F, 3, H, W] float64 on [0, 255]."""
    data = Path(path).read_bytes()
    if len(data) < 25:
        raise ValueError(f"{path}: truncated header")
    magic, version, f, c, h, w, dtype = struct.unpack("<4sIIIIIB", data[:25])
    if magic != RAW_MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if c != 3 or dtype not in (0, 1):
        raise ValueError(f"{path}: unsupported layout (C={c}, dtype={dtype})")
    np_dtype = np.uint8 if dtype == 0 else np.dtype("<f4")
    count = f * c * h * w
    payload = data[25:25 + count * np_dtype.itemsize]
    if len(payload) != count * np_dtype.itemsize:
        raise ValueError(f"{path}: truncated payload")
    return np.frombuffer(payload, dtype=np_dtype).reshape(f, c, h, w).astype(np.float64)


def write_raw_sequence(seq, path):
    """Emit a float32 V4DS file (used by fixtures and exports)."""
    seq = np.asarray(seq, dtype=np.float64)
    f, c, h, w = seq.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIIIIIB", RAW_MAGIC, 1, f, c, h, w, 1))
        fh.write(seq.astype("<f4").tobytes())


def load_clips(clip_dir):
    paths = sorted(Path(clip_dir).glob("*.v4ds"))
    if not paths:
        raise FileNotFoundError(f"no .v4ds clips in {clip_dir}")
    return [read_raw_sequence(p) for p in paths]


def random_crop(clip, crop, rng):
    """Random consecutive-frame, random-position crop of a clip."""
    taps, ch, cw = crop
    frames, _, h, w = clip.shape
    if frames < taps:
        clip = np.concatenate([clip] + [clip[-1:]] * (taps - frames))
        frames = clip.shape[0]
    t0 = int(rng.integers(0, frames - taps + 1))
    y0 = int(rng.integers(0, h - ch + 1))
    x0 = int(rng.integers(0, w - cw + 1))
    return clip[t0:t0 + taps, :, y0:y0 + ch, x0:x0 + cw]


def synthetic_clip(frames=8, height=64, width=64, seed=0, flat=None):
    """Desk-style synthetic clip (moving gradient + smooth texture) or a
    flat field when flat is a gray level; used by smoke runs and tests."""
    if flat is not None:
        return np.full((frames, 3, height, width), float(flat))
    rng = np.random.default_rng(seed)
    pad = 2 * frames + 4
    field = rng.normal(0.0, 1.0, (3, height + pad, width + pad))
    k = np.exp(-0.5 * (np.arange(-6, 7) / 2.0) ** 2)
    k /= k.sum()
    for axis in (1, 2):
        field = np.apply_along_axis(np.convolve, axis, field, k, "same")
    field /= field.std()
    yy, xx = np.mgrid[0:height, 0:width].astype(float)
    out = np.empty((frames, 3, height, width))
    for t in range(frames):
        base = 127.5 + 118.0 * np.sin(2.0 * np.pi * (xx + yy - 6.0 * t) / 96.0)
        out[t] = base[None] + 24.0 * field[:, 2 * t:2 * t + height, t:t + width]
    return np.floor(np.clip(out, 0.0, 255.0) + 0.5)
