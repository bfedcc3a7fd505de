"""strokeseg: corner and tangent point detection for hand-drawn strokes.

Pipeline: resample the stroke, pull candidate corners from its straw
profile, classify candidates and points, then merge the classified
segments between corners into line/curve primitives, inserting corners and
tangent points at the transitions.
"""

from ._kernels import BACKEND as kernel_backend
from .merge import DetectionResult
from .pipeline import DetectorConfig, detect
from .stroke import (CandidateCornerSet, PointLabel, RawStroke, Stroke,
                     StrawProfile, candidate_corners, load_stroke, resample,
                     straw)

__version__ = "0.1.0"

__all__ = [
    "CandidateCornerSet",
    "DetectionResult",
    "DetectorConfig",
    "PointLabel",
    "RawStroke",
    "Stroke",
    "StrawProfile",
    "candidate_corners",
    "detect",
    "kernel_backend",
    "load_stroke",
    "resample",
    "straw",
    "__version__",
]
