import numpy as np
import pytest

from wiener4d import seqio
from wiener4d.engine import EngineConfig, build_buffer, denoise_sequence
from wiener4d.mocomp import build_buffer_mc, flow_path, warp_frame
from wiener4d._kernels import _warp_bilinear_numpy


def oracle_bilinear(frame, flow):
    c, h, w = frame.shape
    out = np.empty_like(frame)
    for y in range(h):
        for x in range(w):
            sx = min(max(x + flow[y, x, 0], 0.0), w - 1.0)
            sy = min(max(y + flow[y, x, 1], 0.0), h - 1.0)
            x0, y0 = int(np.floor(sx)), int(np.floor(sy))
            x1, y1 = min(x0 + 1, w - 1), min(y0 + 1, h - 1)
            fx, fy = sx - x0, sy - y0
            for ch in range(c):
                top = frame[ch, y0, x0] * (1 - fx) + frame[ch, y0, x1] * fx
                bot = frame[ch, y1, x0] * (1 - fx) + frame[ch, y1, x1] * fx
                out[ch, y, x] = top * (1 - fy) + bot * fy
    return out


class TestWarpFrame:
    def test_zero_flow_identity(self):
        rng = np.random.default_rng(0)
        frame = rng.uniform(0, 255, (3, 12, 12))
        assert np.allclose(warp_frame(frame, np.zeros((12, 12, 2))), frame)

    def test_unit_shift_duplicates_last_column(self):
        rng = np.random.default_rng(1)
        frame = rng.uniform(0, 255, (3, 8, 8))
        flow = np.zeros((8, 8, 2))
        flow[:, :, 0] = 1.0
        got = warp_frame(frame, flow)
        assert np.allclose(got[:, :, :-1], frame[:, :, 1:])
        assert np.allclose(got[:, :, -1], frame[:, :, -1])

    def test_half_pixel_shift_averages_neighbours(self):
        rng = np.random.default_rng(2)
        frame = rng.uniform(0, 255, (3, 8, 8))
        flow = np.zeros((8, 8, 2))
        flow[:, :, 0] = 0.5
        got = warp_frame(frame, flow)
        expected = 0.5 * (frame[:, :, :-1] + frame[:, :, 1:])
        assert np.abs(got[:, :, :-1] - expected).max() < 1e-9

    def test_matches_bilinear_oracle(self):
        rng = np.random.default_rng(3)
        frame = rng.uniform(0, 255, (3, 10, 9))
        flow = rng.uniform(-3, 3, (10, 9, 2))
        assert np.abs(warp_frame(frame, flow) - oracle_bilinear(frame, flow)).max() < 1e-9

    def test_backends_agree(self):
        rng = np.random.default_rng(4)
        frame = np.ascontiguousarray(rng.uniform(0, 255, (3, 11, 13)))
        flow = np.ascontiguousarray(rng.uniform(-4, 4, (11, 13, 2)))
        assert np.allclose(warp_frame(frame, flow), _warp_bilinear_numpy(frame, flow))

    def test_linearity(self):
        rng = np.random.default_rng(5)
        f = rng.uniform(0, 255, (3, 8, 8))
        g = rng.uniform(0, 255, (3, 8, 8))
        flow = rng.uniform(-2, 2, (8, 8, 2))
        lhs = warp_frame(2.0 * f + 0.5 * g, flow)
        rhs = 2.0 * warp_frame(f, flow) + 0.5 * warp_frame(g, flow)
        assert np.abs(lhs - rhs).max() < 1e-5

    def test_dim_mismatch(self):
        with pytest.raises(ValueError):
            warp_frame(np.zeros((3, 8, 8)), np.zeros((4, 8, 2)))


def _write_zero_flows(seq, flow_dir, taps=5):
    frames, _, h, w = seq.shape
    flow_dir.mkdir(exist_ok=True)
    r = taps // 2
    for t in range(frames):
        for j in range(taps):
            k = min(max(t - r + j, 0), frames - 1)
            if k != t:
                seqio.save_flow(np.zeros((h, w, 2)), flow_path(flow_dir, t, k))


class TestBuildBufferMc:
    def test_zero_flows_match_plain_buffer(self, tmp_path):
        rng = np.random.default_rng(6)
        seq = rng.uniform(0, 255, (4, 3, 8, 8))
        _write_zero_flows(seq, tmp_path / "flows")
        for t in range(4):
            got = build_buffer_mc(seq, t, 5, tmp_path / "flows")
            assert np.allclose(got, build_buffer(seq, t, 5))

    def test_missing_flow_file(self, tmp_path):
        rng = np.random.default_rng(7)
        seq = rng.uniform(0, 255, (6, 3, 8, 8))
        (tmp_path / "flows").mkdir()
        with pytest.raises(FileNotFoundError, match="t3_n1.flo"):
            build_buffer_mc(seq, 3, 5, tmp_path / "flows")

    def test_exact_flows_align_translating_clip(self, tmp_path):
        # global translation by (1, 2) px/frame with exact flows: warped taps
        # match the centre frame away from the clamped border
        rng = np.random.default_rng(8)
        h = w = 32
        base = rng.uniform(0, 255, (3, h + 40, w + 40))
        frames = 5
        seq = np.stack([base[:, 2 * t:2 * t + h, t:t + w] for t in range(frames)])
        fdir = tmp_path / "flows"
        fdir.mkdir()
        t0 = 2
        for k in range(frames):
            if k == t0:
                continue
            flow = np.zeros((h, w, 2))
            flow[:, :, 0] = t0 - k          # content shifts -1 px in x per frame
            flow[:, :, 1] = 2 * (t0 - k)    # and -2 px in y per frame
            seqio.save_flow(flow, flow_path(fdir, t0, k))
        buf = build_buffer_mc(seq, t0, 5, fdir)
        margin = 6
        centre = seq[t0][:, margin:-margin, margin:-margin]
        for j in range(5):
            assert np.abs(buf[j][:, margin:-margin, margin:-margin] - centre).max() < 1e-9

    def test_mc_identity_at_zero_sigma(self, tmp_path):
        rng = np.random.default_rng(9)
        seq = np.floor(rng.uniform(0, 256, (4, 3, 16, 16))).clip(0, 255)
        _write_zero_flows(seq, tmp_path / "flows")
        cfg = EngineConfig(sigma=0.0, block=8, flows=tmp_path / "flows")
        out = denoise_sequence(seq, cfg)
        assert np.abs(out - seq).max() < 1e-3
