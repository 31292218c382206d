"""Quality and rate metrics: sphere-weighted PSNR, BD-rate, report tables.

WS-PSNR weights each ERP row by the cosine of its latitude so that the
over-sampled pole rows do not dominate the error the way they would in
plain PSNR.  BD-rate is the classic cubic-fit log-rate integral between two
rate/quality curves, reported as a percent rate change at equal quality.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DomainError
from .mocomp import ErpFrame


def _row_weights(height: int) -> np.ndarray:
    j = np.arange(height, dtype=np.float64)
    return np.cos((j + 0.5 - height / 2.0) * np.pi / height)


def plane_ws_psnr(ref: np.ndarray, test: np.ndarray, bit_depth: int) -> float:
    """Sphere-weighted PSNR of one sample plane; inf when identical."""
    if ref.shape != test.shape or ref.ndim != 2:
        raise DomainError("metrics: planes must share one 2-D shape")
    height, width = ref.shape
    w = _row_weights(height)
    err = ref.astype(np.float64) - test.astype(np.float64)
    # Row-major accumulation with compensated summation across rows keeps
    # the result bit-identical regardless of how callers parallelise frames.
    row_sums = (err * err).sum(axis=1) * w
    wmse = math.fsum(row_sums.tolist()) / (width * math.fsum(w.tolist()))
    if wmse == 0.0:
        return math.inf
    peak = (1 << bit_depth) - 1
    return 10.0 * math.log10(peak * peak / wmse)


# Sentinel standing in for an infinite plane PSNR inside the 6:1:1 mix and
# in report cells.
PSNR_CAP = 999.99


def ws_psnr(ref: ErpFrame, test: ErpFrame, chroma: bool = False) -> float:
    """WS-PSNR between two frames: luma only, or the 6:1:1 YUV mix.

    In the mix a lossless plane enters as PSNR_CAP so one perfect plane
    cannot drag the combination to infinity.
    """
    if (ref.width, ref.height, ref.bit_depth) != (
        test.width,
        test.height,
        test.bit_depth,
    ):
        raise DomainError("metrics: frame geometry differs")
    psnr_y = plane_ws_psnr(ref.y, test.y, ref.bit_depth)
    if not chroma:
        return psnr_y
    if ref.cb is None or test.cb is None:
        raise DomainError("metrics: chroma mix requested on luma-only frames")
    psnr_cb = plane_ws_psnr(ref.cb, test.cb, ref.bit_depth)
    psnr_cr = plane_ws_psnr(ref.cr, test.cr, ref.bit_depth)
    parts = [min(p, PSNR_CAP) for p in (psnr_y, psnr_cb, psnr_cr)]
    return (6.0 * parts[0] + parts[1] + parts[2]) / 8.0


@dataclass(frozen=True)
class RDPoint:
    rate: float
    quality: float

    def __post_init__(self):
        if not (np.isfinite(self.rate) and self.rate > 0):
            raise DomainError(f"metrics: rate {self.rate} must be positive")
        if not np.isfinite(self.quality):
            raise DomainError("metrics: quality must be finite")


@dataclass(frozen=True)
class RDCurve:
    """An operating curve: at least four points, rates and qualities both
    strictly increasing (sort your measurements by rate first)."""

    points: tuple[RDPoint, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 4:
            raise DomainError(f"metrics: curve needs >= 4 points, got {len(pts)}")
        rates = [p.rate for p in pts]
        quals = [p.quality for p in pts]
        if any(b <= a for a, b in zip(rates, rates[1:])):
            raise DomainError("metrics: rates must increase strictly")
        if any(b <= a for a, b in zip(quals, quals[1:])):
            raise DomainError("metrics: qualities must increase strictly")

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])

    def shifted(self, rate_offset: float) -> "RDCurve":
        return RDCurve(
            points=tuple(
                RDPoint(rate=p.rate + rate_offset, quality=p.quality)
                for p in self.points
            )
        )


def _mean_log_rate(curve: RDCurve, lo: float, hi: float) -> float:
    coeffs = np.polyfit(curve.qualities, np.log10(curve.rates), 3)
    integral = np.polyint(coeffs)
    return (np.polyval(integral, hi) - np.polyval(integral, lo)) / (hi - lo)


def bd_rate(anchor: RDCurve, test: RDCurve) -> float:
    """Average rate change of test against anchor at equal quality, percent.

    Negative means the test curve spends less rate.  The quality ranges
    must overlap.
    """
    lo = max(anchor.qualities.min(), test.qualities.min())
    hi = min(anchor.qualities.max(), test.qualities.max())
    if hi <= lo:
        raise DomainError("metrics: curves share no quality range")
    diff = _mean_log_rate(test, lo, hi) - _mean_log_rate(anchor, lo, hi)
    return float((10.0**diff - 1.0) * 100.0)


@dataclass(frozen=True)
class SequenceResult:
    """BD input of one sequence; camera_motion_rate is the side-channel
    rate buried in every test point, in the same unit as RDPoint.rate."""

    name: str
    anchor: RDCurve
    test: RDCurve
    camera_motion_rate: float = 0.0

    def __post_init__(self):
        if self.camera_motion_rate < 0:
            raise DomainError("metrics: camera_motion_rate must be >= 0")


@dataclass(frozen=True)
class ReportTables:
    csv: str
    markdown: str


_COLUMNS = ("sequence", "bd_rate_percent", "bd_rate_percent_wo_camera_bits")


def _clip_cell(x: float) -> float:
    return min(max(x, -PSNR_CAP), PSNR_CAP)


def report(results: Sequence[SequenceResult]) -> ReportTables:
    """BD-rate table, with and without the camera motion side channel.

    The second column removes each sequence's camera_motion_rate from the
    test points before computing BD-rate.  An Average row closes the table;
    with no sequences both tables are header-only.
    """
    rows: list[tuple[str, float, float]] = []
    for res in results:
        with_bits = bd_rate(res.anchor, res.test)
        without = bd_rate(res.anchor, res.test.shifted(-res.camera_motion_rate))
        rows.append((res.name, _clip_cell(with_bits), _clip_cell(without)))
    if rows:
        avg = (
            "Average",
            _clip_cell(float(np.mean([r[1] for r in rows]))),
            _clip_cell(float(np.mean([r[2] for r in rows]))),
        )
        rows.append(avg)

    csv_lines = [",".join(_COLUMNS)]
    for name, a, b in rows:
        csv_lines.append(f"{name},{a:.6f},{b:.6f}")

    md_lines = [
        "| " + " | ".join(_COLUMNS) + " |",
        "|" + "|".join(["---"] * len(_COLUMNS)) + "|",
    ]
    for name, a, b in rows:
        md_lines.append(f"| {name} | {a:.6f} | {b:.6f} |")

    return ReportTables(
        csv="\n".join(csv_lines) + "\n",
        markdown="\n".join(md_lines) + "\n",
    )
