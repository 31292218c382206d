"""File formats and the synthetic dolly generator.

Formats: planar YUV (8-bit bytes or 10-bit little-endian 16-bit words,
4:2:0 or luma-only), the float32 .flo optical-flow container, a small CSV
for per-frame camera directions, and whitespace text for point
correspondences.

The generator renders a static procedural world viewed by a camera
translating along a fixed axis, so every frame pair has an analytically
known flow field and a known translation direction.  Two world shapes are
available: a textured sphere shell of constant range (depth falls off away
from the motion axis like real scenes do) and a textured cylinder around
the motion axis (constant perpendicular range, so axial motion shifts each
pixel along its meridian by a constant amount in cot-latitude).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from . import geometry
from .camera_est import FlowField
from .errors import DomainError, FormatError, TruncationError
from .mocomp import ErpFrame

FLO_MAGIC = 202021.25
CAMERA_CSV_HEADER = "frame_index,qx,qy,qz"


@dataclass(frozen=True)
class SequenceSpec:
    """Geometry of a raw YUV file: planar, 4:2:0 when chroma is True."""

    width: int
    height: int
    bit_depth: int = 8
    chroma: bool = True

    def __post_init__(self):
        if self.width < 2 or self.height < 1:
            raise DomainError("video_io: degenerate frame size")
        if self.bit_depth not in (8, 10):
            raise DomainError(f"video_io: bit depth {self.bit_depth} unsupported")
        if self.chroma and (self.width % 2 or self.height % 2):
            raise DomainError("video_io: 4:2:0 needs even dimensions")

    @property
    def sample_bytes(self) -> int:
        return 1 if self.bit_depth == 8 else 2

    @property
    def frame_bytes(self) -> int:
        luma = self.width * self.height
        samples = luma + (luma // 2 if self.chroma else 0)
        return samples * self.sample_bytes


def _sample_dtype(spec: SequenceSpec):
    return np.uint8 if spec.bit_depth == 8 else np.dtype("<u2")


def read_yuv(path: str, spec: SequenceSpec, max_frames: int | None = None) -> list[ErpFrame]:
    """All frames of a raw planar YUV file (or the first max_frames)."""
    size = os.path.getsize(path)
    if size == 0:
        raise FormatError(f"video_io: {path} is empty")
    if size % spec.frame_bytes:
        raise FormatError(
            f"video_io: {path} is {size} bytes, not a multiple of the "
            f"{spec.frame_bytes}-byte frame size"
        )
    count = size // spec.frame_bytes
    if max_frames is not None:
        count = min(count, max_frames)
    dtype = _sample_dtype(spec)
    luma_n = spec.width * spec.height
    frames = []
    with open(path, "rb") as fh:
        for _ in range(count):
            raw = fh.read(spec.frame_bytes)
            if len(raw) < spec.frame_bytes:
                raise TruncationError(f"video_io: short read from {path}")
            flat = np.frombuffer(raw, dtype=dtype)
            y = flat[:luma_n].reshape(spec.height, spec.width)
            cb = cr = None
            if spec.chroma:
                cn = luma_n // 4
                cshape = (spec.height // 2, spec.width // 2)
                cb = flat[luma_n : luma_n + cn].reshape(cshape)
                cr = flat[luma_n + cn :].reshape(cshape)
            frames.append(
                ErpFrame(
                    width=spec.width,
                    height=spec.height,
                    bit_depth=spec.bit_depth,
                    y=y.copy(),
                    cb=None if cb is None else cb.copy(),
                    cr=None if cr is None else cr.copy(),
                )
            )
    return frames


def write_yuv(path: str, frames: Sequence[ErpFrame]):
    """Planar YUV out; chroma goes along when every frame carries it."""
    if not frames:
        raise DomainError("video_io: nothing to write")
    chroma = all(f.cb is not None for f in frames)
    if any((f.cb is not None) != chroma for f in frames):
        raise DomainError("video_io: frames disagree about chroma presence")
    dtype = np.uint8 if frames[0].bit_depth == 8 else np.dtype("<u2")
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(np.ascontiguousarray(f.y, dtype=dtype).tobytes())
            if chroma:
                fh.write(np.ascontiguousarray(f.cb, dtype=dtype).tobytes())
                fh.write(np.ascontiguousarray(f.cr, dtype=dtype).tobytes())


def read_flo(path: str) -> FlowField:
    with open(path, "rb") as fh:
        head = fh.read(12)
        if len(head) < 12:
            raise TruncationError(f"video_io: {path} shorter than a .flo header")
        magic, width, height = struct.unpack("<fii", head)
        if magic != np.float32(FLO_MAGIC):
            raise FormatError(f"video_io: {path} has bad .flo magic {magic!r}")
        if width < 1 or height < 1:
            raise FormatError(f"video_io: {path} has bad size {width}x{height}")
        body = fh.read(width * height * 8)
        if len(body) < width * height * 8:
            raise TruncationError(f"video_io: {path} truncated mid-plane")
    data = np.frombuffer(body, dtype="<f4").reshape(height, width, 2)
    return FlowField(
        du=data[:, :, 0].astype(np.float64), dv=data[:, :, 1].astype(np.float64)
    )


def write_flo(path: str, flow: FlowField):
    data = np.empty((flow.height, flow.width, 2), dtype="<f4")
    data[:, :, 0] = flow.du
    data[:, :, 1] = flow.dv
    with open(path, "wb") as fh:
        fh.write(struct.pack("<fii", FLO_MAGIC, flow.width, flow.height))
        fh.write(data.tobytes())


def write_camera_csv(path: str, entries: Sequence[tuple[int, np.ndarray]]):
    """Ten decimal places: enough that quantizing a reread direction to 24
    fractional bits reproduces the original raw values."""
    lines = [CAMERA_CSV_HEADER]
    for poc, q in entries:
        lines.append(f"{poc},{q[0]:.10f},{q[1]:.10f},{q[2]:.10f}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_camera_csv(path: str) -> list[tuple[int, np.ndarray]]:
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != CAMERA_CSV_HEADER:
        raise FormatError(f"video_io: {path} lacks the '{CAMERA_CSV_HEADER}' header")
    entries = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 4:
            raise FormatError(f"video_io: bad camera row {ln!r}")
        try:
            poc = int(parts[0])
            q = np.array([float(p) for p in parts[1:]])
        except ValueError as exc:
            raise FormatError(f"video_io: bad camera row {ln!r}") from exc
        if not np.all(np.isfinite(q)):
            raise FormatError(f"video_io: non-finite camera row {ln!r}")
        entries.append((poc, q))
    return entries


def read_correspondences(path: str) -> np.ndarray:
    """(N, 4) float array of 'u1 v1 u2 v2' rows; '#' starts a comment."""
    rows = []
    with open(path) as fh:
        for ln in fh:
            ln = ln.split("#", 1)[0].strip()
            if not ln:
                continue
            parts = ln.split()
            if len(parts) != 4:
                raise FormatError(f"video_io: correspondence row {ln!r} is not 4 numbers")
            try:
                rows.append([float(p) for p in parts])
            except ValueError as exc:
                raise FormatError(f"video_io: bad correspondence row {ln!r}") from exc
    if not rows:
        return np.empty((0, 4))
    return np.array(rows)


# ---------------------------------------------------------------------------
# Synthetic dolly sequences


@dataclass(frozen=True)
class SynthConfig:
    """A camera sliding along `direction` through a static textured world.

    step is the camera advance per frame in world units; depth is the shell
    range (sphere) or the perpendicular radius (cylinder).  The sphere world
    requires the whole path to stay well inside the shell.
    """

    width: int = 256
    height: int = 128
    frames: int = 2
    step: float = 0.01
    depth: float = 1.0
    depth_model: Literal["sphere", "cylinder"] = "sphere"
    direction: tuple[float, float, float] = (0.0, 0.0, 1.0)
    bit_depth: int = 8
    seed: int = 0
    texture_components: int = 40

    def __post_init__(self):
        if self.width < 4 or self.height < 2:
            raise DomainError("video_io: synth frame too small")
        if self.frames < 1:
            raise DomainError("video_io: synth needs >= 1 frame")
        if self.depth <= 0 or not np.isfinite(self.depth):
            raise DomainError("video_io: depth must be positive")
        if not np.isfinite(self.step) or self.step < 0:
            raise DomainError("video_io: step must be >= 0")
        if self.depth_model not in ("sphere", "cylinder"):
            raise DomainError(f"video_io: unknown world {self.depth_model!r}")
        if self.bit_depth not in (8, 10):
            raise DomainError("video_io: bit depth must be 8 or 10")
        if self.texture_components < 1:
            raise DomainError("video_io: need at least one texture component")
        if self.depth_model == "sphere":
            reach = (self.frames - 1) * self.step
            if reach >= 0.95 * self.depth:
                raise DomainError(
                    "video_io: camera path leaves the sphere shell "
                    f"(reach {reach:.4g} vs depth {self.depth:.4g})"
                )


@dataclass(frozen=True)
class SynthResult:
    """frames[m] is the view from m*step along the axis; flows[m] carries
    pixel displacements from frame m to m+1; camera[m-1] = (m, direction)
    states the translation that produced frame m."""

    config: SynthConfig
    frames: list[ErpFrame]
    flows: list[FlowField]
    camera: list[tuple[int, np.ndarray]]


class _SphereTexture:
    """Sum of sinusoids over directions on the unit sphere."""

    def __init__(self, rng: np.random.Generator, n: int, peak: int):
        raw = rng.normal(size=(n, 3))
        self.dirs = raw / np.linalg.norm(raw, axis=1, keepdims=True)
        self.freq = rng.uniform(3.0, 16.0, size=n)
        self.phase = rng.uniform(0.0, 2.0 * np.pi, size=n)
        amps = rng.uniform(0.5, 1.0, size=n)
        # 8-bit swing: values stay inside [40, 216] around a 128 base.
        self.amps = amps * (88.0 * (peak + 1) / 256.0 / amps.sum())
        self.base = (peak + 1) / 2.0

    def sample(self, unit_points: np.ndarray) -> np.ndarray:
        dots = unit_points @ self.dirs.T
        return self.base + np.sin(dots * self.freq + self.phase) @ self.amps


class _CylinderTexture:
    """Sum of sinusoids in (azimuth, axial position); integer azimuthal
    harmonics keep the seam continuous."""

    def __init__(self, rng: np.random.Generator, n: int, peak: int, depth: float):
        self.harm = rng.integers(1, 25, size=n).astype(np.float64)
        # Axial band chosen so mid-latitude ERP rows see O(0.1..1) rad of
        # phase per row: slow enough to sample, fast enough to matter.
        self.omega = rng.uniform(10.0, 80.0, size=n) / depth
        self.phase = rng.uniform(0.0, 2.0 * np.pi, size=n)
        amps = rng.uniform(0.5, 1.0, size=n)
        self.amps = amps * (88.0 * (peak + 1) / 256.0 / amps.sum())
        self.base = (peak + 1) / 2.0

    def sample(self, phi: np.ndarray, z: np.ndarray) -> np.ndarray:
        arg = (
            phi[..., None] * self.harm
            + z[..., None] * self.omega
            + self.phase
        )
        return self.base + np.sin(arg) @ self.amps


def _intersect_sphere(cam_z: float, s_axis: np.ndarray, depth: float) -> np.ndarray:
    """World points where rays s from (0,0,cam_z) hit the ||w|| = depth shell."""
    cs = cam_z * s_axis[..., 2]
    t = -cs + np.sqrt(cs * cs + depth * depth - cam_z * cam_z)
    w = t[..., None] * s_axis
    w[..., 2] += cam_z
    return w


def _intersect_cylinder(cam_z: float, s_axis: np.ndarray, depth: float):
    """(azimuth, axial z) where rays from on-axis height cam_z hit the
    radius-`depth` cylinder around the z axis."""
    horiz = np.hypot(s_axis[..., 0], s_axis[..., 1])
    phi = np.arctan2(s_axis[..., 1], s_axis[..., 0])
    z = cam_z + depth * s_axis[..., 2] / horiz
    return phi, z


def synth_dolly(cfg: SynthConfig) -> SynthResult:
    """Render the sequence plus exact flow fields and camera directions.

    Deterministic for a given config.  Pixel bearings never sit exactly on
    a pole (ERP pixel centers are half a row inside), so the cylinder
    intersection is always defined, though its texture gets badly aliased
    in the rows nearest the poles.
    """
    rng = np.random.default_rng(cfg.seed)
    peak = (1 << cfg.bit_depth) - 1
    if cfg.depth_model == "sphere":
        texture = _SphereTexture(rng, cfg.texture_components, peak)
    else:
        texture = _CylinderTexture(rng, cfg.texture_components, peak, cfg.depth)

    raw_axis = np.asarray(cfg.direction, dtype=np.float64)
    norm = np.linalg.norm(raw_axis)
    if norm < 1e-12:
        raise DomainError("video_io: synth direction must be non-zero")
    axis = raw_axis / norm
    rot = geometry.rotation_to_epipole(axis)

    u = np.arange(cfg.width, dtype=np.float64)
    v = np.arange(cfg.height, dtype=np.float64)
    uu, vv = np.meshgrid(u, v)
    theta, phi = geometry.erp_grid_to_sphere(uu, vv, cfg.width, cfg.height)
    bearings = geometry.sphere_grid_to_cart(theta, phi)
    s_axis = bearings @ rot.T

    dtype = np.uint8 if cfg.bit_depth == 8 else np.dtype("<u2")
    frames = []
    flows = []
    for m in range(cfg.frames):
        cam_z = m * cfg.step
        if cfg.depth_model == "sphere":
            w = _intersect_sphere(cam_z, s_axis, cfg.depth)
            values = texture.sample(w / cfg.depth)
        else:
            cphi, cz = _intersect_cylinder(cam_z, s_axis, cfg.depth)
            w = None
            values = texture.sample(cphi, cz)
        y = np.clip(np.rint(values), 0, peak).astype(dtype)
        frames.append(
            ErpFrame(
                width=cfg.width, height=cfg.height, bit_depth=cfg.bit_depth, y=y
            )
        )

        if m + 1 < cfg.frames:
            if w is None:
                horiz = np.hypot(s_axis[..., 0], s_axis[..., 1])
                t = cfg.depth / horiz
                w = t[..., None] * s_axis
                w[..., 2] += cam_z
            w2 = w.copy()
            w2[..., 2] -= (m + 1) * cfg.step
            norm = np.linalg.norm(w2, axis=-1, keepdims=True)
            s2_axis = w2 / norm
            s2 = s2_axis @ rot
            th2, ph2 = geometry.cart_grid_to_sphere(s2)
            u2, v2 = geometry.sphere_grid_to_erp(th2, ph2, cfg.width, cfg.height)
            du = u2 - uu
            du -= cfg.width * np.round(du / cfg.width)
            flows.append(FlowField(du=du, dv=v2 - vv))

    camera = [(m, axis.copy()) for m in range(1, cfg.frames)]
    return SynthResult(config=cfg, frames=frames, flows=flows, camera=camera)
