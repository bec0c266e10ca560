"""Circle detection by randomized isosceles-triangle sampling.

The main entry points are :func:`detect` and :class:`DetectorConfig`; the
evaluation harness lives in :mod:`itcircles.evaluation` and synthetic scenes
in :mod:`itcircles.scenes`.
"""

__version__ = "0.1.0"

from .detector import Detection, DetectorConfig, Stats, detect, detect_with_stats
from .errors import (
    CollinearError,
    DegenerateChordError,
    InvalidParameterError,
    InvalidSpecError,
    NoIntersectionError,
    UndefinedReferenceError,
)
from .preprocess import EdgePoint, EdgeSegment, canny_edges, connected_components, dog_gradient
from .refine import RefineParams, chord_center, refine_candidate
from .sampling import Circle, SamplingParams, fit_circle_3pt, its_check, its_estimate
from .validate import sector_vote, validate_circle

__all__ = [
    "Circle",
    "CollinearError",
    "DegenerateChordError",
    "Detection",
    "DetectorConfig",
    "EdgePoint",
    "EdgeSegment",
    "InvalidParameterError",
    "InvalidSpecError",
    "NoIntersectionError",
    "RefineParams",
    "SamplingParams",
    "Stats",
    "UndefinedReferenceError",
    "canny_edges",
    "chord_center",
    "connected_components",
    "detect",
    "detect_with_stats",
    "dog_gradient",
    "fit_circle_3pt",
    "its_check",
    "its_estimate",
    "refine_candidate",
    "sector_vote",
    "validate_circle",
]
