"""Block-level spectral math: multi-axis FFT, PSDs, coring, DC estimation.

The forward transform is the plain unnormalized DFT (numpy convention);
the inverse carries the full 1/N factor. With that convention the expected
per-bin PSD of white noise through an analysis window w is sigma^2 * sum(w^2),
which is what noise_psd returns.
"""

import numpy as np

__all__ = ["fftn", "ifftn", "noise_psd", "core_gains", "dc_offset"]


def fftn(block):
    """Unnormalized forward DFT over every axis of the block."""
    return np.fft.fftn(np.asarray(block))


def ifftn(spec):
    """Inverse DFT over every axis; returns the real part only.

    Net-refined gains need not preserve Hermitian symmetry, so the inverse
    of a gain-scaled spectrum can carry an imaginary residue; it is
    discarded here by contract.
    """
    return np.fft.ifftn(np.asarray(spec)).real


def window_energy(pair, taps, channels=3):
    """sum of w_a^2 over the full taps x channels x B x B block extent."""
    return taps * channels * float(np.sum(pair.analysis ** 2))


def noise_psd(sigma, pair, taps, channels=3):
    """Expected per-bin noise power sigma^2 * ||w_a||^2.

    sigma is either a scalar STD or a per-pixel STD map restricted to the
    block footprint, in which case sigma^2 is the mean of the squared map.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    if sigma.ndim == 0:
        if sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {sigma}")
        var = float(sigma) ** 2
    else:
        var = float(np.mean(sigma ** 2))
    return var * window_energy(pair, taps, channels)


def core_gains(pyy, pnn):
    """Clamped spectral subtraction: Pxx = max(Pyy - Pnn, 0), H = Pxx/Pyy.

    H is 0 wherever Pyy is 0 (there is nothing to pass).
    """
    pyy = np.asarray(pyy, dtype=np.float64)
    pxx = np.maximum(pyy - pnn, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gains = np.where(pyy > 0.0, pxx / pyy, 0.0)
    return pxx, gains


def dc_offset(block, mode="median", clean=None):
    """Scalar DC estimate of a block: mean, exact median, or clean-block mean."""
    if mode == "mean":
        return float(np.mean(block))
    if mode == "median":
        return float(np.median(block))
    if mode == "gt":
        if clean is None:
            raise ValueError("dc mode 'gt' requires a co-located clean block")
        return float(np.mean(clean))
    raise ValueError(f"unknown dc mode {mode!r}")
