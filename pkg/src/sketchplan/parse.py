"""Top-level sketch parsing: image in, SymbolSet out."""

from __future__ import annotations

from .errors import ComponentTooSmall, ParseError, SketchPlanError
from .segmentation import DEFAULT_TOLERANCE, mask_components, segment_by_color
from .symbols import (
    MIN_STROKE_PIXELS,
    MAX_WAYPOINTS,
    SYMBOL_ARROW,
    SYMBOL_CIRCLE,
    classify_symbol,
    extract_arrow_keypoints,
    extract_circle_keypoints,
)
from .types import DEFAULT_PALETTE, RasterImage, SymbolSet, UnknownComponent


def parse_sketch(
    annotated: RasterImage,
    clean: RasterImage | None = None,
    palette=DEFAULT_PALETTE,
    tolerance: float = DEFAULT_TOLERANCE,
    min_pixels: int = MIN_STROKE_PIXELS,
    max_waypoints: int = MAX_WAYPOINTS,
) -> SymbolSet:
    """Segment, classify and extract every drawn symbol in the image.

    Components that cannot be interpreted (specks, digits, fragments) are
    reported in ``SymbolSet.unknown`` rather than failing the parse; only
    infrastructure errors propagate.  Output is deterministic for identical
    input: masks are visited by ordinal and components in row-major order.
    """
    masks = segment_by_color(annotated, clean, palette, tolerance)
    symbols = []
    unknown = []
    for mask in masks:
        for comp in mask_components(mask):
            try:
                kind = classify_symbol(comp, min_pixels=min_pixels)
            except ComponentTooSmall:
                unknown.append(_diag(comp, "too_small"))
                continue
            try:
                if kind == SYMBOL_ARROW:
                    symbols.append(
                        extract_arrow_keypoints(comp, max_waypoints=max_waypoints)
                    )
                elif kind == SYMBOL_CIRCLE:
                    symbols.append(extract_circle_keypoints(comp))
                else:
                    unknown.append(_diag(comp, "unrecognized"))
            except SketchPlanError as err:
                raise ParseError(
                    f"color {comp.color.ordinal} component {comp.index}: {err}"
                ) from err
    return SymbolSet(symbols=tuple(symbols), unknown=tuple(unknown))


def _diag(comp, reason: str) -> UnknownComponent:
    return UnknownComponent(
        ordinal=comp.color.ordinal,
        pixel_count=comp.pixel_count,
        bbox=comp.bbox,
        reason=reason,
    )
