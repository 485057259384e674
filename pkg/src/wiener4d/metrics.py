"""Quality metrics and reproducible noise synthesis.

PSNR is 10*log10(255^2 / MSE) per frame over all channels, capped at 99 dB.
SSIM uses the standard 11x11 Gaussian weighting (std 1.5) with stability
constants (0.01*255)^2 and (0.03*255)^2; maps are computed per channel on
the valid (un-padded) region, then averaged over channels, pixels, and
frames. This is the plain per-channel RGB variant.

AWGN is drawn from a counter-based Philox stream keyed on (seed, frame
index), so the result is bit-identical no matter how frames are split
across workers. Clipping to [0, 255] is on by default to mirror real 8-bit
capture; analytic-PSNR fixtures turn it off.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["NoiseModel", "add_awgn", "psnr", "ssim"]

PSNR_CAP = 99.0
_SSIM_C1 = (0.01 * 255.0) ** 2
_SSIM_C2 = (0.03 * 255.0) ** 2


@dataclass(frozen=True)
class NoiseModel:
    sigma: float
    seed: int = 0
    clip: bool = True

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


def add_awgn(seq, model):
    """Add white Gaussian noise with per-frame Philox streams."""
    seq = np.asarray(seq, dtype=np.float64)
    if model.sigma == 0.0:
        return seq.copy()
    out = np.empty_like(seq)
    for t in range(seq.shape[0]):
        rng = np.random.Generator(
            np.random.Philox(key=np.array([model.seed, t], dtype=np.uint64))
        )
        out[t] = seq[t] + model.sigma * rng.standard_normal(seq.shape[1:])
    if model.clip:
        np.clip(out, 0.0, 255.0, out=out)
    return out


def _check_dims(ref, test):
    ref = np.asarray(ref, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if ref.shape != test.shape:
        raise ValueError(f"dim mismatch: {ref.shape} vs {test.shape}")
    return ref, test


def psnr(ref, test):
    """Per-frame PSNR in dB plus the mean over frames."""
    ref, test = _check_dims(ref, test)
    per_frame = np.empty(ref.shape[0], dtype=np.float64)
    for t in range(ref.shape[0]):
        mse = float(np.mean((ref[t] - test[t]) ** 2))
        if mse == 0.0:
            per_frame[t] = PSNR_CAP
        else:
            per_frame[t] = min(10.0 * np.log10(255.0 ** 2 / mse), PSNR_CAP)
    return per_frame, float(per_frame.mean())


def _gaussian_taps(size=11, sigma=1.5):
    d = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    taps = np.exp(-(d ** 2) / (2.0 * sigma ** 2))
    return taps / taps.sum()


def _filter_valid(img, taps):
    # separable 'valid' correlation over the trailing two axes
    k = taps.size
    h, w = img.shape[-2:]
    rows = np.zeros(img.shape[:-2] + (h - k + 1, w), dtype=np.float64)
    for i in range(k):
        rows += taps[i] * img[..., i:i + h - k + 1, :]
    out = np.zeros(img.shape[:-2] + (h - k + 1, w - k + 1), dtype=np.float64)
    for i in range(k):
        out += taps[i] * rows[..., :, i:i + w - k + 1]
    return out


def ssim(ref, test):
    """Per-frame SSIM plus the mean over frames; needs H, W >= 11."""
    ref, test = _check_dims(ref, test)
    if ref.shape[-2] < 11 or ref.shape[-1] < 11:
        raise ValueError(f"frames must be at least 11x11 for SSIM, got {ref.shape}")
    taps = _gaussian_taps()
    per_frame = np.empty(ref.shape[0], dtype=np.float64)
    for t in range(ref.shape[0]):
        x, y = ref[t], test[t]
        mu_x = _filter_valid(x, taps)
        mu_y = _filter_valid(y, taps)
        var_x = _filter_valid(x * x, taps) - mu_x ** 2
        var_y = _filter_valid(y * y, taps) - mu_y ** 2
        cov = _filter_valid(x * y, taps) - mu_x * mu_y
        num = (2.0 * mu_x * mu_y + _SSIM_C1) * (2.0 * cov + _SSIM_C2)
        den = (mu_x ** 2 + mu_y ** 2 + _SSIM_C1) * (var_x + var_y + _SSIM_C2)
        per_frame[t] = float(np.mean(num / den))
    return per_frame, float(per_frame.mean())
