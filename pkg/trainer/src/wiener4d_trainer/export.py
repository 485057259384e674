"""W4DW bundle writer/reader (the interface shared with the denoiser).

Layout: magic "W4DW", version u32, tensor count u32; per tensor: name
length u16, UTF-8 name, ndim u8, dims u32[], float32 little-endian
payload. Exports are atomic (temp file + rename).
"""

import os
import struct
import tempfile
from pathlib import Path

import numpy as np

MAGIC = b"W4DW"
VERSION = 1


def save_w4dw(bundle, path):
    path = Path(path)
    blob = [struct.pack("<4sII", MAGIC, VERSION, len(bundle))]
    for name, tensor in bundle.items():
        arr = np.ascontiguousarray(tensor, dtype="<f4")
        encoded = name.encode("utf-8")
        blob.append(struct.pack("<H", len(encoded)))
        blob.append(encoded)
        blob.append(struct.pack("<B", arr.ndim))
        blob.append(struct.pack(f"<{arr.ndim}I", *arr.shape))
        blob.append(arr.tobytes())
    fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".w4dw.tmp")
    with os.fdopen(fd, "wb") as fh:
        fh.write(b"".join(blob))
    os.replace(tmp, path)


def load_w4dw(path):
    data = Path(path).read_bytes()
    magic, version, count = struct.unpack("<4sII", data[:12])
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    if version > VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    off = 12
    bundle = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", data, off)
        off += 2
        name = data[off:off + nlen].decode("utf-8")
        off += nlen
        (ndim,) = struct.unpack_from("<B", data, off)
        off += 1
        dims = struct.unpack_from(f"<{ndim}I", data, off)
        off += 4 * ndim
        n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
        bundle[name] = np.frombuffer(data, dtype="<f4", count=n,
                                     offset=off).reshape(dims).copy()
        off += 4 * n
    return bundle


def coring_entries(net):
    out = {}
    for stage_name, stage in (("s1", net.stage1), ("s2", net.stage2)):
        for i, conv in enumerate(stage):
            out[f"coring.{stage_name}.k{i}"] = conv.weight.detach().cpu().numpy()
    return out


def noise_entries(net):
    return {f"noise.k{i}": conv.weight.detach().cpu().numpy()
            for i, conv in enumerate(net.layers)}


def window_entries(analysis, synthesis):
    """Peak-normalized window tensors (the loader clamps and re-normalizes)."""
    out = {}
    for name, module in (("analysis", analysis), ("synthesis", synthesis)):
        win = module().detach().cpu().numpy()
        out[f"window.{name}"] = win / win.max()
    return out


def metadata_entries(cfg):
    return {
        "meta.leaky_slope": np.asarray([0.1], dtype=np.float32),
        "meta.lambda_centre": np.asarray([cfg.lambda_centre], dtype=np.float32),
        "meta.lambda_seq": np.asarray([cfg.lambda_seq], dtype=np.float32),
        "meta.lambda_noise": np.asarray([cfg.lambda_noise], dtype=np.float32),
    }
