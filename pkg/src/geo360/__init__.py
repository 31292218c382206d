"""Geodesic motion models and camera-motion tooling for 360-degree video.

The package covers the chain from sphere/ERP geometry, through per-block
motion compensation with geodesic displacement models, to camera direction
estimation, a compact camera-motion bitstream, and the usual rate/quality
metrics.  `geo360.cli` exposes the same functionality as subcommands.
"""

from .errors import (
    AmbiguousSignError,
    DegenerateGeometryError,
    DomainError,
    FormatError,
    Geo360Error,
    NoFlowInformationError,
    NoMotionError,
    TruncationError,
)
from .geometry import ErpCoord, SphericalPoint
from .motion_model import (
    BlockSpec,
    GeodesicModelConfig,
    MotionVector2D,
    OpCount,
    default_delta,
)
from .mocomp import BlockComparison, ErpFrame, PredictionResult, SearchResult
from .camera_est import BearingPair, EssentialMatrix, FinetuneConfig, FlowField
from .cam_code import Bitstream, CamMotionRecord
from .metrics import RDCurve, RDPoint, SequenceResult
from .video_io import SequenceSpec, SynthConfig, SynthResult

__version__ = "0.1.0"

__all__ = [
    "AmbiguousSignError",
    "BearingPair",
    "Bitstream",
    "BlockComparison",
    "BlockSpec",
    "CamMotionRecord",
    "DegenerateGeometryError",
    "DomainError",
    "ErpCoord",
    "ErpFrame",
    "EssentialMatrix",
    "FinetuneConfig",
    "FlowField",
    "FormatError",
    "Geo360Error",
    "GeodesicModelConfig",
    "MotionVector2D",
    "NoFlowInformationError",
    "NoMotionError",
    "OpCount",
    "PredictionResult",
    "RDCurve",
    "RDPoint",
    "SearchResult",
    "SequenceResult",
    "SequenceSpec",
    "SphericalPoint",
    "SynthConfig",
    "SynthResult",
    "TruncationError",
    "default_delta",
    "__version__",
]
