"""Motion-compensated frame buffers from precomputed optical-flow files.

Flows live in a directory as Middlebury .flo files named "t{t}_n{k}.flo"
for warping neighbour frame k toward target frame t. Temporal boundaries
replicate: a tap whose clamped frame index equals the target is copied
unwarped, so no flow file is needed for it.
"""

from pathlib import Path

import numpy as np

from . import seqio
from ._kernels import warp_bilinear

__all__ = ["warp_frame", "flow_path", "build_buffer_mc"]


def warp_frame(frame, flow):
    """Bilinear-sample a [C, H, W] frame at (x+u, y+v); edges are clamped."""
    frame = np.ascontiguousarray(frame, dtype=np.float64)
    flow = np.ascontiguousarray(flow, dtype=np.float64)
    if flow.shape[:2] != frame.shape[1:]:
        raise ValueError(
            f"flow dims {flow.shape[:2]} do not match frame {frame.shape[1:]}"
        )
    return warp_bilinear(frame, flow)


def flow_path(flow_dir, target, neighbour):
    return Path(flow_dir) / f"t{target}_n{neighbour}.flo"


def build_buffer_mc(seq, t, taps, flow_dir):
    """[T, C, H, W] buffer with neighbours warped toward frame t."""
    seq = np.asarray(seq, dtype=np.float64)
    frames = seq.shape[0]
    r = taps // 2
    buf = np.empty((taps,) + seq.shape[1:], dtype=np.float64)
    for j in range(taps):
        k = min(max(t - r + j, 0), frames - 1)
        if k == t:
            buf[j] = seq[t]
            continue
        path = flow_path(flow_dir, t, k)
        if not path.exists():
            raise FileNotFoundError(f"missing flow file {path}")
        flow = seqio.load_flow(path)
        buf[j] = warp_frame(seq[k], flow)
    return buf
