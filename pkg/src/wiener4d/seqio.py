"""Bit-exact readers/writers for image sequences, weight bundles, and flow files.

Conventions used throughout the package:

* A sequence is a float64 array of shape [F, 3, H, W] holding samples on the
  8-bit [0, 255] scale (frame-major, channel-planar, row-major).
* A weight bundle is an ordered dict mapping tensor names to float32 arrays.
* A flow field is a float64 array of shape [H, W, 2] with per-pixel (u, v).

File layouts (all little-endian):

* Raw sequence ".v4ds": magic "V4DS", version u32, F C H W u32, dtype u8
  (0 = u8, 1 = f32), then the payload in sequence order.
* Weight bundle ".w4dw": magic "W4DW", version u32, tensor count u32; per
  tensor: name length u16, UTF-8 name, ndim u8, dims u32[], f32 payload.
* Flow ".flo": Middlebury style — f32 sentinel 202021.25, width i32,
  height i32, interleaved (u, v) f32 row-major.
"""

import struct
from pathlib import Path

import numpy as np
from PIL import Image

__all__ = [
    "FormatError",
    "BadMagicError",
    "TruncatedFileError",
    "UnsupportedVersionError",
    "DuplicateTensorError",
    "MixedFrameSizesError",
    "read_sequence",
    "write_sequence",
    "load_weights",
    "save_weights",
    "load_flow",
    "to_uint8",
    "validate_sequence",
]

RAW_MAGIC = b"V4DS"
WEIGHTS_MAGIC = b"W4DW"
FLOW_SENTINEL = 202021.25
FORMAT_VERSION = 1


class FormatError(Exception):
    """A file does not conform to its declared format."""


class BadMagicError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class DuplicateTensorError(FormatError):
    pass


class MixedFrameSizesError(FormatError):
    pass


def validate_sequence(seq):
    seq = np.asarray(seq, dtype=np.float64)
    if seq.ndim != 4 or seq.shape[1] != 3:
        raise ValueError(f"sequence must have shape [F, 3, H, W], got {seq.shape}")
    if seq.shape[0] < 1 or seq.shape[2] < 8 or seq.shape[3] < 8:
        raise ValueError(f"sequence dims out of range: {seq.shape}")
    if not np.all(np.isfinite(seq)):
        raise ValueError("sequence contains non-finite samples")
    return seq


def to_uint8(seq):
    """Clamp to [0, 255] and round half-away-from-zero to 8-bit."""
    clipped = np.clip(seq, 0.0, 255.0)
    return np.floor(clipped + 0.5).astype(np.uint8)


def _read_exact(fh, n, what):
    data = fh.read(n)
    if len(data) != n:
        raise TruncatedFileError(f"truncated while reading {what}")
    return data


def read_sequence(path, kind=None):
    """Read a sequence from a PNG directory or a raw .v4ds file.

    kind: "png-dir", "raw", or None to infer from the path.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such sequence: {path}")
    if kind is None:
        kind = "png-dir" if path.is_dir() else "raw"
    if kind == "png-dir":
        return _read_png_dir(path)
    if kind == "raw":
        return _read_raw(path)
    raise ValueError(f"unknown sequence kind: {kind!r}")


def _read_png_dir(path):
    files = sorted(p for p in path.iterdir() if p.suffix.lower() == ".png")
    if not files:
        raise FileNotFoundError(f"no .png files in {path}")
    frames = []
    shape = None
    for p in files:
        with Image.open(p) as img:
            arr = np.asarray(img.convert("RGB"), dtype=np.uint8)
        if shape is None:
            shape = arr.shape
        elif arr.shape != shape:
            raise MixedFrameSizesError(f"{p.name}: {arr.shape} != {shape}")
        frames.append(arr.transpose(2, 0, 1))
    return validate_sequence(np.stack(frames).astype(np.float64))


def _read_raw(path):
    with open(path, "rb") as fh:
        header = _read_exact(fh, 25, "raw header")
        magic, version, f, c, h, w, dtype = struct.unpack("<4sIIIIIB", header)
        if magic != RAW_MAGIC:
            raise BadMagicError(f"bad raw magic {magic!r} in {path}")
        if version > FORMAT_VERSION:
            raise UnsupportedVersionError(f"raw version {version} > {FORMAT_VERSION}")
        if c != 3:
            raise FormatError(f"raw sequence must have 3 channels, got {c}")
        if dtype not in (0, 1):
            raise FormatError(f"unknown raw dtype code {dtype}")
        count = f * c * h * w
        np_dtype = np.dtype(np.uint8) if dtype == 0 else np.dtype("<f4")
        payload = fh.read(count * np_dtype.itemsize)
    expected = count * np_dtype.itemsize
    if len(payload) != expected:
        raise TruncatedFileError(
            f"raw payload is {len(payload)} bytes, expected {expected}"
        )
    data = np.frombuffer(payload, dtype=np_dtype).reshape(f, c, h, w)
    return validate_sequence(data.astype(np.float64))


def write_sequence(seq, path, kind=None, dtype="f32"):
    """Write a sequence as a PNG directory or raw .v4ds file.

    Raw payload dtype is "f32" (bit-exact roundtrip) or "u8" (clamped to
    [0, 255], rounded half-away-from-zero). PNG output is always 8-bit.
    """
    seq = validate_sequence(seq)
    path = Path(path)
    if kind is None:
        kind = "raw" if path.suffix == ".v4ds" else "png-dir"
    if kind == "png-dir":
        path.mkdir(parents=True, exist_ok=True)
        u8 = to_uint8(seq)
        for i in range(seq.shape[0]):
            Image.fromarray(u8[i].transpose(1, 2, 0), mode="RGB").save(
                path / f"frame_{i:05d}.png"
            )
        return
    if kind != "raw":
        raise ValueError(f"unknown sequence kind: {kind!r}")
    f, c, h, w = seq.shape
    code = 1 if dtype == "f32" else 0
    if dtype == "f32":
        payload = seq.astype("<f4").tobytes()
    elif dtype == "u8":
        payload = to_uint8(seq).tobytes()
    else:
        raise ValueError(f"raw dtype must be f32 or u8, got {dtype!r}")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sIIIIIB", RAW_MAGIC, FORMAT_VERSION, f, c, h, w, code))
        fh.write(payload)


def load_weights(path):
    """Load a W4DW weight bundle as an ordered name -> float32 array dict."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such weight bundle: {path}")
    bundle = {}
    with open(path, "rb") as fh:
        header = _read_exact(fh, 12, "bundle header")
        magic, version, count = struct.unpack("<4sII", header)
        if magic != WEIGHTS_MAGIC:
            raise BadMagicError(f"bad bundle magic {magic!r} in {path}")
        if version > FORMAT_VERSION:
            raise UnsupportedVersionError(f"bundle version {version} > {FORMAT_VERSION}")
        for _ in range(count):
            (name_len,) = struct.unpack("<H", _read_exact(fh, 2, "name length"))
            name = _read_exact(fh, name_len, "tensor name").decode("utf-8")
            if name in bundle:
                raise DuplicateTensorError(f"duplicate tensor name {name!r}")
            (ndim,) = struct.unpack("<B", _read_exact(fh, 1, "ndim"))
            dims = struct.unpack(f"<{ndim}I", _read_exact(fh, 4 * ndim, "dims"))
            n = int(np.prod(dims, dtype=np.int64)) if ndim else 1
            raw = _read_exact(fh, 4 * n, f"payload of {name!r}")
            bundle[name] = np.frombuffer(raw, dtype="<f4").reshape(dims).copy()
    return bundle


def save_weights(bundle, path):
    """Write a name -> array dict as a W4DW bundle (float32 little-endian)."""
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", WEIGHTS_MAGIC, FORMAT_VERSION, len(bundle)))
        for name, tensor in bundle.items():
            arr = np.ascontiguousarray(tensor, dtype="<f4")
            encoded = name.encode("utf-8")
            if not encoded:
                raise ValueError("tensor names must be non-empty")
            fh.write(struct.pack("<H", len(encoded)))
            fh.write(encoded)
            fh.write(struct.pack("<B", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_flow(path):
    """Read a Middlebury-style .flo file into an [H, W, 2] float array."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such flow file: {path}")
    with open(path, "rb") as fh:
        head = _read_exact(fh, 12, "flow header")
        sentinel, w, h = struct.unpack("<fii", head)
        if abs(sentinel - FLOW_SENTINEL) > 1e-3:
            raise BadMagicError(f"bad flow sentinel {sentinel} in {path}")
        raw = fh.read(8 * w * h)
    if len(raw) != 8 * w * h:
        raise TruncatedFileError(f"flow payload is {len(raw)} bytes, expected {8*w*h}")
    flow = np.frombuffer(raw, dtype="<f4").reshape(h, w, 2).astype(np.float64)
    if not np.all(np.isfinite(flow)):
        raise FormatError(f"flow field in {path} has non-finite values")
    return flow


def save_flow(flow, path):
    """Write an [H, W, 2] array as a Middlebury-style .flo file."""
    flow = np.asarray(flow, dtype=np.float64)
    if flow.ndim != 3 or flow.shape[2] != 2:
        raise ValueError(f"flow must have shape [H, W, 2], got {flow.shape}")
    h, w = flow.shape[:2]
    with open(path, "wb") as fh:
        fh.write(struct.pack("<fii", FLOW_SENTINEL, w, h))
        fh.write(flow.astype("<f4").tobytes())
