"""wiener4d: a lightweight 4D Wiener-filter video denoiser.

Blocks of taps x colour x space are transformed with an unnormalized FFT,
cored against the expected noise PSD, and overlap-added back with explicit
window normalization. Tiny bias-free CNNs can refine the spectral gains
and estimate an unknown per-pixel noise level.
"""

from ._kernels import BACKEND
from .engine import (
    ConfigError,
    EngineConfig,
    blind_sigma,
    denoise_baseline3d,
    denoise_multiscale,
    denoise_sequence,
)
from .metrics import NoiseModel, add_awgn, psnr, ssim
from .mocomp import build_buffer_mc, warp_frame
from .refine_nets import (
    build_coring_net,
    build_noise_net,
    estimate_noise_map,
    make_coring_weights,
    make_noise_weights,
    refine_gains,
)
from .seqio import (
    load_flow,
    load_weights,
    read_sequence,
    save_weights,
    write_sequence,
)
from .spectral import core_gains, dc_offset, fftn, ifftn, noise_psd
from .tensor_core import ConvLayer, conv_forward, count_params, leaky_relu, rearrange
from .windows import WindowPair, make_window, norm_map

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigError",
    "EngineConfig",
    "NoiseModel",
    "WindowPair",
    "ConvLayer",
    "add_awgn",
    "blind_sigma",
    "build_buffer_mc",
    "build_coring_net",
    "build_noise_net",
    "conv_forward",
    "core_gains",
    "count_params",
    "dc_offset",
    "denoise_baseline3d",
    "denoise_multiscale",
    "denoise_sequence",
    "estimate_noise_map",
    "fftn",
    "ifftn",
    "leaky_relu",
    "load_flow",
    "load_weights",
    "make_coring_weights",
    "make_noise_weights",
    "make_window",
    "noise_psd",
    "norm_map",
    "psnr",
    "read_sequence",
    "rearrange",
    "refine_gains",
    "save_weights",
    "ssim",
    "warp_frame",
    "write_sequence",
]
