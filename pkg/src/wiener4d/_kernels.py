"""Hot inner-loop kernels with a numba fast path and a pure-numpy fallback.

The backend is chosen once at import time from the WIENER4D_BACKEND
environment variable: "numba" (default when importable), "numpy", or "auto".
Both implementations stay importable so benchmarks can time them side by
side (see benchmarks/bench_backends.py).

All kernels are single-threaded and GIL-releasing; parallelism happens at
the frame level in the engine, which keeps accumulation order fixed and
outputs bit-identical across worker counts.
"""

import os

import numpy as np

__all__ = [
    "BACKEND",
    "gather_blocks",
    "scatter_blocks",
    "warp_bilinear",
    "block_median",
    "taper_blocks",
    "core_scale",
    "collapse_centre",
]


def _gather_blocks_numpy(buf, ys, xs, block):
    # buf: [T, C, H, W] -> [n, T, C, B, B] for block origins (ys[i], xs[i])
    t, c = buf.shape[0], buf.shape[1]
    n = ys.shape[0]
    out = np.empty((n, t, c, block, block), dtype=buf.dtype)
    for i in range(n):
        out[i] = buf[:, :, ys[i]:ys[i] + block, xs[i]:xs[i] + block]
    return out


def _scatter_blocks_numpy(acc, blocks, ys, xs):
    # acc: [C, H, W] += blocks[i] at (ys[i], xs[i]); in-place, fixed order
    b = blocks.shape[-1]
    for i in range(ys.shape[0]):
        acc[:, ys[i]:ys[i] + b, xs[i]:xs[i] + b] += blocks[i]
    return acc


def _warp_bilinear_numpy(frame, flow):
    # frame: [C, H, W], flow: [H, W, 2] (u, v); samples at (x+u, y+v),
    # coordinates clamped to the frame edge.
    c, h, w = frame.shape
    xs = np.arange(w, dtype=np.float64)[None, :] + flow[:, :, 0]
    ys = np.arange(h, dtype=np.float64)[:, None] + flow[:, :, 1]
    xs = np.clip(xs, 0.0, w - 1.0)
    ys = np.clip(ys, 0.0, h - 1.0)
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = xs - x0
    fy = ys - y0
    out = np.empty_like(frame)
    for ch in range(c):
        p = frame[ch]
        top = p[y0, x0] * (1.0 - fx) + p[y0, x1] * fx
        bot = p[y1, x0] * (1.0 - fx) + p[y1, x1] * fx
        out[ch] = top * (1.0 - fy) + bot * fy
    return out


def _block_median_numpy(flat):
    # exact median per row (even counts average the two middle values)
    return np.median(flat, axis=1)


def _taper_blocks_numpy(blocks, dc, win):
    # blocks: [n, ..., B, B] -= dc per block, then *= the 2-D window
    shape = (blocks.shape[0],) + (1,) * (blocks.ndim - 1)
    blocks -= dc.reshape(shape)
    blocks *= win
    return blocks


def _core_scale_numpy(spec, pnn):
    # spec *= max(1 - pnn/|spec|^2, 0) elementwise; gain 0 where spec == 0
    pyy = spec.real ** 2
    pyy += spec.imag ** 2
    shape = (spec.shape[0],) + (1,) * (spec.ndim - 1)
    with np.errstate(divide="ignore"):
        np.divide(pnn.reshape(shape), pyy, out=pyy)
    np.subtract(1.0, pyy, out=pyy)
    np.maximum(pyy, 0.0, out=pyy)
    spec *= pyy
    return spec


def _collapse_centre_numpy(spec, phases):
    # weighted sum over axis 1: out[n, ...] = sum_k phases[k] * spec[:, k]
    out = phases[0] * spec[:, 0]
    for k in range(1, phases.size):
        out += phases[k] * spec[:, k]
    return out


_ENV = os.environ.get("WIENER4D_BACKEND", "auto").strip().lower()
if _ENV not in ("auto", "numba", "numpy"):
    raise ValueError(f"WIENER4D_BACKEND must be auto|numba|numpy, got {_ENV!r}")

_numba_kernels = None
if _ENV in ("auto", "numba"):
    try:
        from numba import njit

        @njit(cache=True, nogil=True)
        def _gather_blocks_numba(buf, ys, xs, block):
            t, c = buf.shape[0], buf.shape[1]
            n = ys.shape[0]
            out = np.empty((n, t, c, block, block), dtype=buf.dtype)
            for i in range(n):
                y0 = ys[i]
                x0 = xs[i]
                for j in range(t):
                    for k in range(c):
                        for dy in range(block):
                            for dx in range(block):
                                out[i, j, k, dy, dx] = buf[j, k, y0 + dy, x0 + dx]
            return out

        @njit(cache=True, nogil=True)
        def _scatter_blocks_numba(acc, blocks, ys, xs):
            n, c, b = blocks.shape[0], blocks.shape[1], blocks.shape[2]
            for i in range(n):
                y0 = ys[i]
                x0 = xs[i]
                for k in range(c):
                    for dy in range(b):
                        for dx in range(b):
                            acc[k, y0 + dy, x0 + dx] += blocks[i, k, dy, dx]
            return acc

        @njit(cache=True, nogil=True)
        def _warp_bilinear_numba(frame, flow):
            c, h, w = frame.shape
            out = np.empty_like(frame)
            for y in range(h):
                for x in range(w):
                    sx = x + flow[y, x, 0]
                    sy = y + flow[y, x, 1]
                    if sx < 0.0:
                        sx = 0.0
                    elif sx > w - 1.0:
                        sx = w - 1.0
                    if sy < 0.0:
                        sy = 0.0
                    elif sy > h - 1.0:
                        sy = h - 1.0
                    x0 = int(np.floor(sx))
                    y0 = int(np.floor(sy))
                    x1 = min(x0 + 1, w - 1)
                    y1 = min(y0 + 1, h - 1)
                    fx = sx - x0
                    fy = sy - y0
                    for ch in range(c):
                        top = frame[ch, y0, x0] * (1.0 - fx) + frame[ch, y0, x1] * fx
                        bot = frame[ch, y1, x0] * (1.0 - fx) + frame[ch, y1, x1] * fx
                        out[ch, y, x] = top * (1.0 - fy) + bot * fy
            return out

        @njit(cache=True, nogil=True)
        def _select_kth(scratch, left, right, k):
            # iterative quickselect with median-of-three pivoting
            while True:
                if left == right:
                    return scratch[left]
                mid = (left + right) // 2
                if scratch[mid] < scratch[left]:
                    scratch[mid], scratch[left] = scratch[left], scratch[mid]
                if scratch[right] < scratch[left]:
                    scratch[right], scratch[left] = scratch[left], scratch[right]
                if scratch[right] < scratch[mid]:
                    scratch[right], scratch[mid] = scratch[mid], scratch[right]
                pivot = scratch[mid]
                i, j = left, right
                while i <= j:
                    while scratch[i] < pivot:
                        i += 1
                    while scratch[j] > pivot:
                        j -= 1
                    if i <= j:
                        scratch[i], scratch[j] = scratch[j], scratch[i]
                        i += 1
                        j -= 1
                if k <= j:
                    right = j
                elif k >= i:
                    left = i
                else:
                    return scratch[k]

        @njit(cache=True, nogil=True)
        def _block_median_numba(flat):
            n, m = flat.shape
            out = np.empty(n, dtype=np.float64)
            scratch = np.empty(m, dtype=np.float64)
            for i in range(n):
                scratch[:] = flat[i]
                if m % 2 == 1:
                    out[i] = _select_kth(scratch, 0, m - 1, m // 2)
                else:
                    lo = _select_kth(scratch, 0, m - 1, m // 2 - 1)
                    # partner value: smallest element right of the k-th slot
                    hi = scratch[m // 2]
                    for j in range(m // 2 + 1, m):
                        if scratch[j] < hi:
                            hi = scratch[j]
                    out[i] = 0.5 * (lo + hi)
            return out

        @njit(cache=True, nogil=True)
        def _taper_blocks_numba(blocks, dc, win):
            n = blocks.shape[0]
            b = win.shape[0]
            flat = blocks.reshape(n, -1, b, b)
            planes = flat.shape[1]
            for i in range(n):
                d = dc[i]
                for p in range(planes):
                    for dy in range(b):
                        for dx in range(b):
                            flat[i, p, dy, dx] = (flat[i, p, dy, dx] - d) * win[dy, dx]
            return blocks

        @njit(cache=True, nogil=True)
        def _core_scale_numba(spec, pnn):
            n = spec.shape[0]
            flat = spec.reshape(n, -1)
            m = flat.shape[1]
            for i in range(n):
                p = pnn[i]
                for j in range(m):
                    v = flat[i, j]
                    pyy = v.real * v.real + v.imag * v.imag
                    if pyy > p:
                        flat[i, j] = v * ((pyy - p) / pyy)
                    else:
                        flat[i, j] = 0.0
            return spec

        @njit(cache=True, nogil=True)
        def _collapse_centre_numba(spec, phases):
            n, t = spec.shape[0], spec.shape[1]
            flat = spec.reshape(n, t, -1)
            m = flat.shape[2]
            out = np.zeros((n, m), dtype=np.complex128)
            for i in range(n):
                for k in range(t):
                    ph = phases[k]
                    for j in range(m):
                        out[i, j] += ph * flat[i, k, j]
            return out.reshape((n,) + spec.shape[2:])

        _numba_kernels = (
            _gather_blocks_numba,
            _scatter_blocks_numba,
            _warp_bilinear_numba,
            _block_median_numba,
            _taper_blocks_numba,
            _core_scale_numba,
            _collapse_centre_numba,
        )
    except ImportError:
        if _ENV == "numba":
            raise

if _numba_kernels is not None:
    BACKEND = "numba"
    (gather_blocks, scatter_blocks, warp_bilinear, block_median,
     taper_blocks, core_scale, collapse_centre) = _numba_kernels
else:
    BACKEND = "numpy"
    gather_blocks = _gather_blocks_numpy
    scatter_blocks = _scatter_blocks_numpy
    warp_bilinear = _warp_bilinear_numpy
    block_median = _block_median_numpy
    taper_blocks = _taper_blocks_numpy
    core_scale = _core_scale_numpy
    collapse_centre = _collapse_centre_numpy
