"""sketchplan: hand-drawn arrow/circle instructions compiled into 3D keypoint
plans and executed in a kinematic manipulation simulator."""

from . import errors
from .types import (
    ALPHA_ROTATION,
    ALPHA_TRANSLATION,
    DEFAULT_PALETTE,
    EXTENDED_PALETTE,
    ActionDescriptor,
    ArrowSymbol,
    CircleSymbol,
    DepthMap,
    Keypoint2,
    Keypoint3,
    Plan,
    Pose,
    RasterImage,
    StepColor,
    StepPlan,
    SymbolSet,
    validate_palette,
)
from .segmentation import ColorMask, segment_by_color
from .skeleton import Skeleton, skeletonize
from .symbols import classify_symbol, extract_arrow_keypoints, extract_circle_keypoints
from .parse import parse_sketch

__version__ = "0.1.0"

__all__ = [
    "ALPHA_ROTATION",
    "ALPHA_TRANSLATION",
    "DEFAULT_PALETTE",
    "EXTENDED_PALETTE",
    "ActionDescriptor",
    "ArrowSymbol",
    "CircleSymbol",
    "ColorMask",
    "DepthMap",
    "Keypoint2",
    "Keypoint3",
    "Plan",
    "Pose",
    "RasterImage",
    "Skeleton",
    "StepColor",
    "StepPlan",
    "SymbolSet",
    "classify_symbol",
    "errors",
    "extract_arrow_keypoints",
    "extract_circle_keypoints",
    "parse_sketch",
    "segment_by_color",
    "skeletonize",
    "validate_palette",
]
