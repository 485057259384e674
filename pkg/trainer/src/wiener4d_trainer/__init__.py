"""Trainer for the wiener4d denoiser: coring net, blind noise net, windows.

Exports W4DW weight bundles the inference engine loads directly.
"""

from .data import TrainConfig, load_clips, random_crop, read_raw_sequence, \
    synthetic_clip, write_raw_sequence
from .export import load_w4dw, save_w4dw
from .nets import CoringNetTorch, NoiseNetTorch
from .replica import WienerReplica
from .train import TrainResult, train_blind, train_coring, train_windows

__all__ = [
    "TrainConfig",
    "TrainResult",
    "CoringNetTorch",
    "NoiseNetTorch",
    "WienerReplica",
    "load_clips",
    "load_w4dw",
    "random_crop",
    "read_raw_sequence",
    "save_w4dw",
    "synthetic_clip",
    "train_blind",
    "train_coring",
    "train_windows",
    "write_raw_sequence",
]
