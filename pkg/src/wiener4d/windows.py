"""Analysis/synthesis window pairs and overlap-add normalization maps.

Windows are 2-D spatial profiles; the temporal extent of every block is
flat (each temporal tap reuses the same spatial taper). All windows are
peak-normalized to 1 and floored at 1e-3 of the peak so the accumulated
weight map stays safely away from zero at frame corners.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "WindowPair",
    "WindowError",
    "make_window",
    "norm_map",
    "block_positions",
    "cosine_profile",
    "half_cosine_profile",
]

POSITIVITY_FLOOR = 1e-3
COVERAGE_FLOOR = 1e-6


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class WindowPair:
    analysis: np.ndarray   # [B, B], peak 1, entries >= 1e-3
    synthesis: np.ndarray  # [B, B], same constraints
    block: int
    alpha_a: float | None = None
    alpha_s: float | None = None

    @property
    def product(self):
        return self.analysis * self.synthesis


def _normalize(win):
    peak = win.max()
    if not np.isfinite(peak) or peak <= 0.0:
        raise WindowError("window has no positive entries")
    win = win / peak
    return np.maximum(win, POSITIVITY_FLOOR)


def cosine_profile(block):
    n = np.arange(block, dtype=np.float64)
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * (n + 0.5) / block)


def half_cosine_profile(block):
    """Sine-lobe profile whose square is the raised cosine.

    The product of two of these sums to one across half-block strides,
    which is what the 3-D baseline relies on for implicit normalization.
    """
    n = np.arange(block, dtype=np.float64)
    return np.sin(np.pi * (n + 0.5) / block)


def make_window(shape, block, alpha=None, bundle=None):
    """Build a WindowPair of the given shape.

    shape: "cosine" (periodic raised cosine, separable), "gaussian"
    (exp(-alpha*r^2) about the block centre), or "trained" (tensors
    "window.analysis"/"window.synthesis" from a weight bundle).
    alpha defaults to 8/B^2, i.e. a Gaussian std of B/4.
    """
    if block < 4:
        raise WindowError(f"block size must be >= 4, got {block}")
    if shape == "cosine":
        prof = cosine_profile(block)
        win = _normalize(np.outer(prof, prof))
        return WindowPair(win, win, block)
    if shape == "gaussian":
        if alpha is None:
            alpha = 8.0 / (block * block)
        if alpha <= 0:
            raise WindowError(f"gaussian alpha must be positive, got {alpha}")
        centre = (block - 1) / 2.0
        d = np.arange(block, dtype=np.float64) - centre
        r2 = d[:, None] ** 2 + d[None, :] ** 2
        win = _normalize(np.exp(-alpha * r2))
        return WindowPair(win, win, block, alpha_a=alpha, alpha_s=alpha)
    if shape == "trained":
        if bundle is None:
            raise WindowError("trained windows require a weight bundle")
        pair = []
        for key in ("window.analysis", "window.synthesis"):
            if key not in bundle:
                raise WindowError(f"bundle is missing {key!r}")
            win = np.asarray(bundle[key], dtype=np.float64)
            if win.shape != (block, block):
                raise WindowError(
                    f"{key!r} has dims {win.shape}, expected {(block, block)}"
                )
            pair.append(_normalize(win))
        return WindowPair(pair[0], pair[1], block)
    raise WindowError(f"unknown window shape {shape!r}")


def block_positions(extent, block, stride):
    """Block origins 0, s, 2s, ... with the final origin clamped to extent-B."""
    if block > extent:
        raise ValueError(f"block {block} exceeds extent {extent}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    last = extent - block
    pos = list(range(0, last + 1, stride))
    if pos[-1] != last:
        pos.append(last)
    return np.asarray(pos, dtype=np.int64)


def norm_map(pair, height, width, stride):
    """Per-pixel sum of synthesis*analysis weight over all block placements."""
    prod = pair.product
    b = pair.block
    acc = np.zeros((height, width), dtype=np.float64)
    for y in block_positions(height, b, stride):
        for x in block_positions(width, b, stride):
            acc[y:y + b, x:x + b] += prod
    if acc.min() < COVERAGE_FLOOR:
        raise WindowError(
            f"norm map has uncovered pixels (min weight {acc.min():.3e})"
        )
    return acc
