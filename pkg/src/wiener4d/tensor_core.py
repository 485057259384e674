"""Minimal dense-tensor ops for auxiliary-network inference.

Convolutions are bias-free cross-correlations with zero padding that
preserves spatial extents. The heavy lifting is a per-tap tensordot, which
keeps memory bounded and routes the arithmetic through BLAS; batch inputs
are processed in chunks so activations never balloon.
"""

from dataclasses import dataclass

import numpy as np
from einops import rearrange as _einops_rearrange

__all__ = ["ConvLayer", "conv_forward", "leaky_relu", "rearrange", "count_params"]

DEFAULT_LEAKY_SLOPE = 0.1
_BATCH_CHUNK = 64


@dataclass(frozen=True)
class ConvLayer:
    kernel: np.ndarray          # [Cout, Cin, k1(, k2, k3)] — never a bias term
    activation: str = "leaky"   # "leaky" or "none"
    slope: float = DEFAULT_LEAKY_SLOPE

    def __post_init__(self):
        k = self.kernel
        if k.ndim < 3 or k.ndim > 5:
            raise ValueError(f"kernel must be 3-5 dimensional, got {k.ndim}")
        if any(e % 2 == 0 for e in k.shape[2:]):
            raise ValueError(f"kernel extents must be odd, got {k.shape[2:]}")
        if self.activation not in ("leaky", "none"):
            raise ValueError(f"unknown activation {self.activation!r}")

    @property
    def cout(self):
        return self.kernel.shape[0]

    @property
    def cin(self):
        return self.kernel.shape[1]


def leaky_relu(x, slope=DEFAULT_LEAKY_SLOPE):
    x = np.asarray(x)
    return np.where(x >= 0, x, slope * x)


def _conv_same(x, kernel):
    # x: [N, Cin, d...], kernel: [Cout, Cin, k...]; zero-padded 'same' output
    spatial = x.shape[2:]
    ks = kernel.shape[2:]
    pads = [(0, 0), (0, 0)] + [(k // 2, k // 2) for k in ks]
    xp = np.pad(x, pads)
    out = np.zeros((x.shape[0], kernel.shape[0]) + spatial, dtype=x.dtype)
    for taps in np.ndindex(*ks):
        sl = tuple(slice(t, t + s) for t, s in zip(taps, spatial))
        w = kernel[(slice(None), slice(None)) + taps]  # [Cout, Cin]
        patch = xp[(slice(None), slice(None)) + sl]    # [N, Cin, d...]
        # tensordot over Cin -> [Cout, N, d...]
        out += np.tensordot(w, patch, axes=([1], [1])).swapaxes(0, 1)
    return out


def conv_forward(x, layer):
    """Apply one bias-free conv layer (plus its activation) to [N, Cin, d...]."""
    x = np.asarray(x, dtype=np.float64)
    kernel = np.asarray(layer.kernel, dtype=np.float64)
    if x.ndim != kernel.ndim:
        raise ValueError(
            f"input rank {x.ndim} does not match kernel rank {kernel.ndim}"
        )
    if x.shape[1] != layer.cin:
        raise ValueError(f"input has {x.shape[1]} channels, kernel wants {layer.cin}")
    n = x.shape[0]
    if n > _BATCH_CHUNK:
        out = np.empty((n, layer.cout) + x.shape[2:], dtype=np.float64)
        for i in range(0, n, _BATCH_CHUNK):
            out[i:i + _BATCH_CHUNK] = _conv_same(x[i:i + _BATCH_CHUNK], kernel)
    else:
        out = _conv_same(x, kernel)
    if layer.activation == "leaky":
        out = leaky_relu(out, layer.slope)
    return out


def rearrange(x, pattern, **axis_sizes):
    """Relayout axes per an einops-style pattern; element count is conserved."""
    try:
        return _einops_rearrange(np.asarray(x), pattern, **axis_sizes)
    except Exception as exc:
        raise ValueError(f"bad rearrange pattern {pattern!r}: {exc}") from exc


def count_params(layers):
    """Total parameter count: sum of Cout*Cin*prod(kernel extents)."""
    return int(sum(int(np.prod(layer.kernel.shape)) for layer in layers))
