import math
import struct

import numpy as np
import pytest

from geo360 import camera_est, geometry, video_io
from geo360.camera_est import FlowField
from geo360.errors import DomainError, FormatError, TruncationError
from geo360.mocomp import ErpFrame
from geo360.video_io import SequenceSpec, SynthConfig


# --- raw YUV -----------------------------------------------------------------


def test_yuv_8bit_round_trip(tmp_path):
    rng = np.random.default_rng(0)
    spec = SequenceSpec(width=8, height=4, bit_depth=8, chroma=True)
    frames = [
        ErpFrame(
            width=8, height=4, bit_depth=8,
            y=rng.integers(0, 256, size=(4, 8), dtype=np.int64),
            cb=rng.integers(0, 256, size=(2, 4), dtype=np.int64),
            cr=rng.integers(0, 256, size=(2, 4), dtype=np.int64),
        )
        for _ in range(3)
    ]
    path = tmp_path / "seq.yuv"
    video_io.write_yuv(path, frames)
    assert path.stat().st_size == 3 * spec.frame_bytes
    back = video_io.read_yuv(path, spec)
    assert len(back) == 3
    for a, b in zip(frames, back):
        np.testing.assert_array_equal(a.y, b.y)
        np.testing.assert_array_equal(a.cb, b.cb)
        np.testing.assert_array_equal(a.cr, b.cr)


def test_yuv_10bit_little_endian(tmp_path):
    # a 10-bit sample is two bytes, low byte first: 0x22 0x01 -> 290
    path = tmp_path / "one.yuv"
    payload = struct.pack("<HHHH", 290, 0, 1023, 7)
    path.write_bytes(payload * 2)  # 2x2 luma + 1+1 chroma samples... no:
    # keep it luma-only to stay exact: 2x2 frame = 4 samples
    spec = SequenceSpec(width=2, height=2, bit_depth=10, chroma=False)
    frames = video_io.read_yuv(path, spec)
    assert len(frames) == 2
    assert frames[0].y[0, 0] == 290
    assert frames[0].y[1, 0] == 1023


def test_yuv_luma_only_round_trip(tmp_path):
    spec = SequenceSpec(width=16, height=8, bit_depth=8, chroma=False)
    y = np.arange(128, dtype=np.int32).reshape(8, 16)
    f = ErpFrame(width=16, height=8, bit_depth=8, y=y)
    path = tmp_path / "l.yuv"
    video_io.write_yuv(path, [f])
    back = video_io.read_yuv(path, spec)
    np.testing.assert_array_equal(back[0].y, y)
    assert back[0].cb is None


def test_yuv_bad_sizes(tmp_path):
    spec = SequenceSpec(width=8, height=4, bit_depth=8, chroma=False)
    empty = tmp_path / "empty.yuv"
    empty.write_bytes(b"")
    with pytest.raises(FormatError):
        video_io.read_yuv(empty, spec)
    ragged = tmp_path / "ragged.yuv"
    ragged.write_bytes(b"\x00" * 33)
    with pytest.raises(FormatError):
        video_io.read_yuv(ragged, spec)


def test_yuv_max_frames(tmp_path):
    spec = SequenceSpec(width=8, height=4, bit_depth=8, chroma=False)
    path = tmp_path / "s.yuv"
    path.write_bytes(b"\x01" * (4 * spec.frame_bytes))
    assert len(video_io.read_yuv(path, spec, max_frames=2)) == 2


def test_sequence_spec_validation():
    with pytest.raises(DomainError):
        SequenceSpec(width=9, height=4, chroma=True)
    with pytest.raises(DomainError):
        SequenceSpec(width=8, height=4, bit_depth=12)


# --- .flo --------------------------------------------------------------------


def test_flo_round_trip(tmp_path):
    rng = np.random.default_rng(1)
    flow = FlowField(du=rng.normal(size=(6, 9)), dv=rng.normal(size=(6, 9)))
    path = tmp_path / "f.flo"
    video_io.write_flo(path, flow)
    back = video_io.read_flo(path)
    np.testing.assert_allclose(back.du, flow.du, atol=1e-6)
    np.testing.assert_allclose(back.dv, flow.dv, atol=1e-6)


def test_flo_crafted_single_pixel(tmp_path):
    path = tmp_path / "one.flo"
    path.write_bytes(
        struct.pack("<fii", 202021.25, 1, 1) + struct.pack("<ff", 0.5, -1.25)
    )
    flow = video_io.read_flo(path)
    assert flow.du[0, 0] == 0.5
    assert flow.dv[0, 0] == -1.25


def test_flo_bad_magic(tmp_path):
    path = tmp_path / "bad.flo"
    path.write_bytes(struct.pack("<fii", 0.0, 1, 1) + b"\x00" * 8)
    with pytest.raises(FormatError):
        video_io.read_flo(path)


def test_flo_truncated(tmp_path):
    path = tmp_path / "short.flo"
    path.write_bytes(struct.pack("<fii", 202021.25, 4, 4) + b"\x00" * 10)
    with pytest.raises(TruncationError):
        video_io.read_flo(path)
    header_only = tmp_path / "h.flo"
    header_only.write_bytes(b"\x00\x00")
    with pytest.raises(TruncationError):
        video_io.read_flo(header_only)


# --- camera CSV / correspondences -----------------------------------------------


def test_camera_csv_round_trip(tmp_path):
    rng = np.random.default_rng(2)
    entries = []
    for poc in range(5):
        q = rng.normal(size=3)
        q /= np.linalg.norm(q)
        entries.append((poc, q))
    path = tmp_path / "cam.csv"
    video_io.write_camera_csv(path, entries)
    back = video_io.read_camera_csv(path)
    assert [p for p, _ in back] == list(range(5))
    for (_, a), (_, b) in zip(entries, back):
        assert np.max(np.abs(a - b)) < 1e-9  # ten decimals kept


def test_camera_csv_header_enforced(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("poc,x,y,z\n0,0,0,1\n")
    with pytest.raises(FormatError):
        video_io.read_camera_csv(path)


def test_camera_csv_bad_rows(tmp_path):
    path = tmp_path / "bad2.csv"
    path.write_text("frame_index,qx,qy,qz\n0,0,0\n")
    with pytest.raises(FormatError):
        video_io.read_camera_csv(path)
    path.write_text("frame_index,qx,qy,qz\n0,0,0,inf\n")
    with pytest.raises(FormatError):
        video_io.read_camera_csv(path)


def test_correspondences(tmp_path):
    path = tmp_path / "pairs.txt"
    path.write_text("# header comment\n1 2 3 4\n5 6 7 8  # trailing\n")
    quads = video_io.read_correspondences(path)
    assert quads.shape == (2, 4)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n")
    assert video_io.read_correspondences(empty).shape == (0, 4)
    bad = tmp_path / "bad.txt"
    bad.write_text("1 2 3\n")
    with pytest.raises(FormatError):
        video_io.read_correspondences(bad)


# --- synthetic sequences ------------------------------------------------------------


def test_synth_config_validation():
    with pytest.raises(DomainError):
        SynthConfig(depth_model="torus")
    with pytest.raises(DomainError):
        SynthConfig(step=-0.1)
    with pytest.raises(DomainError):
        # camera path would pierce the sphere shell
        SynthConfig(frames=200, step=0.01, depth=1.0)
    with pytest.raises(DomainError):
        video_io.synth_dolly(SynthConfig(direction=(0.0, 0.0, 0.0)))


def test_synth_deterministic():
    cfg = SynthConfig(width=64, height=32, frames=3, step=0.01, seed=12)
    a = video_io.synth_dolly(cfg)
    b = video_io.synth_dolly(cfg)
    for fa, fb in zip(a.frames, b.frames):
        np.testing.assert_array_equal(fa.y, fb.y)
    for xa, xb in zip(a.flows, b.flows):
        np.testing.assert_array_equal(xa.du, xb.du)
    c = video_io.synth_dolly(SynthConfig(width=64, height=32, frames=3, step=0.01, seed=13))
    assert not np.array_equal(a.frames[0].y, c.frames[0].y)


def test_synth_zero_step_is_static():
    cfg = SynthConfig(width=64, height=32, frames=3, step=0.0, seed=3)
    out = video_io.synth_dolly(cfg)
    np.testing.assert_array_equal(out.frames[0].y, out.frames[1].y)
    for flow in out.flows:
        # projection round trip leaves ~1e-14 of float residue
        assert np.max(np.abs(flow.du)) < 1e-9
        assert np.max(np.abs(flow.dv)) < 1e-9


def test_synth_camera_rows():
    cfg = SynthConfig(width=64, height=32, frames=4, step=0.02, seed=0,
                      direction=(0.0, 0.0, 1.0))
    out = video_io.synth_dolly(cfg)
    assert [p for p, _ in out.camera] == [1, 2, 3]
    for _, q in out.camera:
        assert np.allclose(q, [0.0, 0.0, 1.0])


def test_synth_flow_matches_projection_geometry():
    # independent oracle: re-derive the flow of a few pixels from the world
    # model (static sphere shell, camera moved along +z by `step`)
    cfg = SynthConfig(width=128, height=64, frames=2, step=0.03, seed=5)
    out = video_io.synth_dolly(cfg)
    flow = out.flows[0]
    d = cfg.depth
    for (u, v) in ((10, 20), (64, 32), (100, 40), (30, 50)):
        s = geometry.sphere_to_cart(
            geometry.erp_to_sphere(
                geometry.ErpCoord(u=float(u), v=float(v), width=128, height=64)
            )
        )
        # ray from the origin camera hits the unit-depth shell at d*s; the
        # second camera sits at step * z
        x = d * s - np.array([0.0, 0.0, cfg.step])
        s2 = x / np.linalg.norm(x)
        p2 = geometry.cart_to_sphere(s2)
        c2 = geometry.sphere_to_erp(p2, 128, 64)
        du = c2.u - u
        dv = c2.v - v
        du -= 128.0 * round(du / 128.0)
        assert abs(flow.du[v, u] - du) < 1e-6
        assert abs(flow.dv[v, u] - dv) < 1e-6


def test_synth_flow_feeds_camera_estimation():
    cfg = SynthConfig(width=128, height=64, frames=2, step=0.02, seed=6,
                      direction=(0.2, -0.3, 0.93))
    out = video_io.synth_dolly(cfg)
    q_true = np.asarray(cfg.direction, dtype=float)
    q_true /= np.linalg.norm(q_true)
    pairs = camera_est.flow_to_pairs(out.flows[0], 4, 128, 64)
    est = camera_est.estimate_camera_motion(pairs)
    assert math.degrees(geometry.angle_between(est, q_true)) < 0.2
