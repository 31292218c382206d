"""Block motion compensation on equirectangular frames.

Blocks of the current frame are predicted by sampling the reference frame at
the continuous source coordinates produced by a geodesic motion model (or by
a plain translational shift, kept as the baseline).  Sampling is bilinear
with horizontal wrap-around and vertical clamping; the matching cost is the
sum of absolute luma differences.

Determinism: searches scan a fixed candidate grid and reduce with plain
row-major numpy sums on one thread, so results do not depend on block order
or machine parallelism.  SAD ties are broken by smaller |t_u| + |t_v|, then
smaller t_u, then smaller t_v.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import math

import numpy as np

from . import motion_model
from .errors import DomainError
from .motion_model import (
    BlockGeometry,
    BlockSpec,
    GeodesicModelConfig,
    MotionVector2D,
)

# Source coordinates this close to an integer sample are snapped onto it, so
# identity mappings reproduce the reference bit-exactly.
SNAP_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class ErpFrame:
    """One decoded ERP picture: luma plane plus optional 4:2:0 chroma."""

    width: int
    height: int
    bit_depth: int
    y: np.ndarray
    cb: np.ndarray | None = None
    cr: np.ndarray | None = None

    def __post_init__(self):
        if self.bit_depth not in (8, 10):
            raise DomainError(f"mocomp: bit depth {self.bit_depth} not in (8, 10)")
        if self.y.shape != (self.height, self.width):
            raise DomainError(
                f"mocomp: luma shape {self.y.shape} != "
                f"({self.height}, {self.width})"
            )
        if not np.issubdtype(self.y.dtype, np.integer):
            raise DomainError("mocomp: sample planes must be integer arrays")
        limit = (1 << self.bit_depth) - 1
        if self.y.size and int(self.y.max()) > limit:
            raise DomainError(f"mocomp: luma exceeds {self.bit_depth}-bit range")
        if (self.cb is None) != (self.cr is None):
            raise DomainError("mocomp: chroma planes must come in pairs")
        if self.cb is not None:
            if self.width % 2 or self.height % 2:
                raise DomainError("mocomp: 4:2:0 needs even luma dimensions")
            cshape = (self.height // 2, self.width // 2)
            if self.cb.shape != cshape or self.cr.shape != cshape:
                raise DomainError(f"mocomp: chroma shape is not {cshape}")

    @property
    def max_value(self) -> int:
        return (1 << self.bit_depth) - 1


@dataclass(frozen=True)
class PredictionResult:
    """Predicted samples for one block, cost, and mapping health."""

    block: np.ndarray
    sad: float
    degenerate: int
    cb: np.ndarray | None = None
    cr: np.ndarray | None = None


@dataclass(frozen=True)
class SearchOutcome:
    t: MotionVector2D
    sad: float


@dataclass(frozen=True)
class SearchResult:
    t: MotionVector2D
    prediction: PredictionResult


@dataclass(frozen=True)
class BlockComparison:
    """Best (t, SAD) of each model on one block; center_theta is the plain
    ERP latitude of the block center (not the epipole-frame angle)."""

    block: BlockSpec
    center_theta: float
    outcomes: dict[str, SearchOutcome]


class _PlaneSampler:
    """Bilinear taps for a fixed set of source coordinates.

    Precomputing indices and weights once lets the same mapping be applied
    to many reference planes (one per frame pair) cheaply.  x wraps, y
    clamps (pole rows extend as constants), and coordinates within SNAP_EPS
    of an integer snap onto it first.
    """

    def __init__(self, x, y, width: int, height: int):
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        xr = np.rint(x)
        x = np.where(np.abs(x - xr) < SNAP_EPS, xr, x)
        yr = np.rint(y)
        y = np.where(np.abs(y - yr) < SNAP_EPS, yr, y)

        x = np.mod(x, width)
        y = np.clip(y, 0.0, float(height - 1))
        x0 = np.floor(x).astype(np.int64) % width
        fx = x - np.floor(x)
        y0 = np.floor(y).astype(np.int64)
        fy = y - y0

        self.x0 = x0
        self.x1 = (x0 + 1) % width
        self.y0 = y0
        self.y1 = np.minimum(y0 + 1, height - 1)
        self.w00 = (1.0 - fx) * (1.0 - fy)
        self.w01 = fx * (1.0 - fy)
        self.w10 = (1.0 - fx) * fy
        self.w11 = fx * fy

    def sample(self, plane: np.ndarray) -> np.ndarray:
        return (
            plane[self.y0, self.x0] * self.w00
            + plane[self.y0, self.x1] * self.w01
            + plane[self.y1, self.x0] * self.w10
            + plane[self.y1, self.x1] * self.w11
        )


def _sample_plane(plane: np.ndarray, x, y) -> np.ndarray:
    """One-shot bilinear sample of a float plane: x wraps, y clamps."""
    h, w = plane.shape
    return _PlaneSampler(x, y, w, h).sample(plane)


def sample_bilinear(frame: ErpFrame, x, y):
    """Bilinear luma sample at continuous ERP coordinates (x, y)."""
    out = _sample_plane(frame.y.astype(np.float64), x, y)
    if out.ndim == 0:
        return float(out)
    return out


def _check_pair(ref: ErpFrame, cur: ErpFrame):
    if (ref.width, ref.height, ref.bit_depth) != (cur.width, cur.height, cur.bit_depth):
        raise DomainError("mocomp: reference and current frame geometry differ")


def _block_view(frame: ErpFrame, block: BlockSpec) -> np.ndarray:
    if block.x0 + block.width > frame.width or block.y0 + block.height > frame.height:
        raise DomainError(f"mocomp: block {block} exceeds frame bounds")
    return frame.y[
        block.y0 : block.y0 + block.height, block.x0 : block.x0 + block.width
    ]


def predict_block(
    ref: ErpFrame,
    cur: ErpFrame,
    block: BlockSpec,
    q,
    t: MotionVector2D,
    cfg: GeodesicModelConfig,
) -> PredictionResult:
    """Predict one block of cur from ref under motion (q, t).

    Cost is luma-only.  When both frames carry 4:2:0 chroma and the block is
    even-aligned, chroma is predicted with the same mapping at half
    resolution (coordinates halved on the even-indexed luma grid).
    """
    _check_pair(ref, cur)
    mapping = motion_model.block_mapping(
        block, q, t, cfg, cur.width, cur.height
    )
    pred = _sample_plane(ref.y.astype(np.float64), mapping.src_u, mapping.src_v)
    cur_block = _block_view(cur, block).astype(np.float64)
    sad = float(np.abs(pred - cur_block).sum())

    cb = cr = None
    even = (block.x0 | block.y0 | block.width | block.height) % 2 == 0
    if ref.cb is not None and cur.cb is not None and even:
        cu = mapping.src_u[0::2, 0::2] / 2.0
        cv = mapping.src_v[0::2, 0::2] / 2.0
        cb = _sample_plane(ref.cb.astype(np.float64), cu, cv)
        cr = _sample_plane(ref.cr.astype(np.float64), cu, cv)

    return PredictionResult(
        block=pred, sad=sad, degenerate=int(mapping.clamped.sum()), cb=cb, cr=cr
    )


def _candidate_offsets(search_range: float, step: float) -> np.ndarray:
    if search_range <= 0 or step <= 0:
        raise DomainError("mocomp: search range and step must be positive")
    n = int(round(search_range / step))
    if n < 1 or abs(n * step - search_range) > 1e-9:
        raise DomainError(
            f"mocomp: range {search_range} is not a multiple of step {step}"
        )
    return np.arange(-n, n + 1, dtype=np.float64) * step


def _pick_best(sad: np.ndarray, tu: np.ndarray, tv: np.ndarray) -> int:
    """Index of the minimal SAD under the deterministic tie-break."""
    cost = np.abs(tu) + np.abs(tv)
    order = np.lexsort((tv, tu, cost, sad))
    return int(order[0])


def _search_geodesic(
    ref_plane: np.ndarray,
    cur_block: np.ndarray,
    geom: BlockGeometry,
    cfg: GeodesicModelConfig,
    offsets: np.ndarray,
) -> SearchOutcome:
    src_u, src_v, _ = motion_model.map_block_geometry_batch(
        geom, offsets, offsets, cfg
    )
    pred = _sample_plane(ref_plane, src_u, src_v)
    sad = np.abs(pred - cur_block).sum(axis=(-2, -1))
    tu_grid, tv_grid = np.meshgrid(offsets, offsets, indexing="ij")
    best = _pick_best(sad.ravel(), tu_grid.ravel(), tv_grid.ravel())
    return SearchOutcome(
        t=MotionVector2D(float(tu_grid.ravel()[best]), float(tv_grid.ravel()[best])),
        sad=float(sad.ravel()[best]),
    )


def motion_search(
    ref: ErpFrame,
    cur: ErpFrame,
    block: BlockSpec,
    q,
    cfg: GeodesicModelConfig,
    search_range: float,
    step: float = 1.0,
) -> SearchResult:
    """Exhaustive search over the (t_u, t_v) grid for one block.

    The grid is symmetric, includes (0, 0), and halving the step only adds
    candidates, so a finer search never returns a larger SAD.
    """
    _check_pair(ref, cur)
    offsets = _candidate_offsets(search_range, step)
    geom = motion_model.prepare_block_geometry(block, q, cur.width, cur.height)
    cur_block = _block_view(cur, block).astype(np.float64)
    outcome = _search_geodesic(
        ref.y.astype(np.float64), cur_block, geom, cfg, offsets
    )
    return SearchResult(
        t=outcome.t, prediction=predict_block(ref, cur, block, q, outcome.t, cfg)
    )


def translational_search(
    ref: ErpFrame,
    cur: ErpFrame,
    block: BlockSpec,
    search_range: float,
    step: float = 1.0,
) -> SearchOutcome:
    """Baseline: shift the block by whole ERP pixels (t in pixel units)."""
    _check_pair(ref, cur)
    offsets = _candidate_offsets(search_range, step)
    cur_block = _block_view(cur, block).astype(np.float64)
    ref_plane = ref.y.astype(np.float64)

    base_u = block.x0 + np.arange(block.width, dtype=np.float64)
    base_v = block.y0 + np.arange(block.height, dtype=np.float64)
    uu, vv = np.meshgrid(base_u, base_v)
    src_u = uu[None, None] + offsets[:, None, None, None]
    src_v = np.broadcast_to(
        vv[None, None] + offsets[None, :, None, None],
        (len(offsets), len(offsets)) + vv.shape,
    )
    src_u = np.broadcast_to(src_u, src_v.shape)
    pred = _sample_plane(ref_plane, src_u, src_v)
    sad = np.abs(pred - cur_block).sum(axis=(-2, -1))
    tu_grid, tv_grid = np.meshgrid(offsets, offsets, indexing="ij")
    best = _pick_best(sad.ravel(), tu_grid.ravel(), tv_grid.ravel())
    return SearchOutcome(
        t=MotionVector2D(float(tu_grid.ravel()[best]), float(tv_grid.ravel()[best])),
        sad=float(sad.ravel()[best]),
    )


def compare_sequence(
    frames: list[ErpFrame],
    blocks: list[BlockSpec],
    q_per_pair: list[np.ndarray],
    model_configs: Mapping[str, GeodesicModelConfig],
    search_range: float,
    step: float = 1.0,
) -> list[list[BlockComparison]]:
    """compare_models over every consecutive pair of a sequence.

    q_per_pair[m] is the camera direction for the pair (m, m+1); result[m]
    holds that pair's block rows.  A block's candidate mapping depends only
    on (q, model), so it is computed once per distinct q and reused across
    pairs, which is what makes long sequences affordable.
    """
    if len(frames) < 2:
        raise DomainError("mocomp: sequence comparison needs >= 2 frames")
    if len(q_per_pair) != len(frames) - 1:
        raise DomainError(
            f"mocomp: {len(q_per_pair)} directions for {len(frames) - 1} pairs"
        )
    for f in frames[1:]:
        _check_pair(frames[0], f)
    width, height = frames[0].width, frames[0].height
    offsets = _candidate_offsets(search_range, step)
    tu_grid, tv_grid = np.meshgrid(offsets, offsets, indexing="ij")
    tu_flat, tv_flat = tu_grid.ravel(), tv_grid.ravel()

    planes = [f.y.astype(np.float64) for f in frames]
    n_pairs = len(frames) - 1
    groups: dict[bytes, list[int]] = {}
    q_of: dict[bytes, np.ndarray] = {}
    for m, q in enumerate(q_per_pair):
        key = np.asarray(q, dtype=np.float64).tobytes()
        groups.setdefault(key, []).append(m)
        q_of[key] = np.asarray(q, dtype=np.float64)

    results: list[list[BlockComparison]] = [[] for _ in range(n_pairs)]
    for block in blocks:
        cur_blocks = [_block_view(frames[m + 1], block).astype(np.float64) for m in range(n_pairs)]
        _, vc = block.center()
        center_theta = math.pi * (vc + 0.5) / height

        base_u = block.x0 + np.arange(block.width, dtype=np.float64)
        base_v = block.y0 + np.arange(block.height, dtype=np.float64)
        uu, vv = np.meshgrid(base_u, base_v)
        tr_u = uu[None] + tu_flat[:, None, None]
        tr_v = vv[None] + tv_flat[:, None, None]
        samplers = {"translational": _PlaneSampler(tr_u, tr_v, width, height)}

        outcomes_by_pair: list[dict[str, SearchOutcome]] = [{} for _ in range(n_pairs)]
        for key, members in groups.items():
            geom = motion_model.prepare_block_geometry(block, q_of[key], width, height)
            model_samplers = dict(samplers)
            for label, cfg in model_configs.items():
                src_u, src_v, _ = motion_model.map_block_geometry_batch(
                    geom, offsets, offsets, cfg
                )
                model_samplers[label] = _PlaneSampler(
                    src_u.reshape(-1, block.height, block.width),
                    src_v.reshape(-1, block.height, block.width),
                    width,
                    height,
                )
            for label, sampler in model_samplers.items():
                for m in members:
                    pred = sampler.sample(planes[m])
                    sad = np.abs(pred - cur_blocks[m]).sum(axis=(-2, -1))
                    best = _pick_best(sad, tu_flat, tv_flat)
                    outcomes_by_pair[m][label] = SearchOutcome(
                        t=MotionVector2D(float(tu_flat[best]), float(tv_flat[best])),
                        sad=float(sad[best]),
                    )
        for m in range(n_pairs):
            ordered = {"translational": outcomes_by_pair[m]["translational"]}
            ordered.update(
                (label, outcomes_by_pair[m][label]) for label in model_configs
            )
            results[m].append(
                BlockComparison(
                    block=block, center_theta=center_theta, outcomes=ordered
                )
            )
    return results


def compare_models(
    ref: ErpFrame,
    cur: ErpFrame,
    blocks: list[BlockSpec],
    q,
    model_configs: Mapping[str, GeodesicModelConfig],
    search_range: float,
    step: float = 1.0,
) -> list[BlockComparison]:
    """Best motion of every model (plus the translational baseline) per block."""
    return compare_sequence(
        [ref, cur], blocks, [np.asarray(q, dtype=np.float64)],
        model_configs, search_range, step,
    )[0]


def strict_winner(comparison: BlockComparison) -> str | None:
    """Model whose SAD is strictly below every other; None on any tie."""
    items = sorted(comparison.outcomes.items(), key=lambda kv: kv[1].sad)
    if len(items) > 1 and items[0][1].sad == items[1][1].sad:
        return None
    return items[0][0]


def tile_blocks(width: int, height: int, bw: int, bh: int) -> list[BlockSpec]:
    """Cover a frame with aligned bw x bh blocks; dimensions must divide."""
    if width % bw or height % bh:
        raise DomainError(
            f"mocomp: {bw}x{bh} blocks do not tile a {width}x{height} frame"
        )
    return [
        BlockSpec(x0=x, y0=y, width=bw, height=bh)
        for y in range(0, height, bh)
        for x in range(0, width, bw)
    ]
