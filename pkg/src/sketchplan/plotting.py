"""Small drawing helpers: keypoint overlays and the executed-vs-instructed
trajectory plot (plain SVG, no plotting dependency)."""

from __future__ import annotations

import numpy as np

from .types import ArrowSymbol, CircleSymbol, RasterImage, SymbolSet

CROSS_COLOR = (255, 255, 255)
CROSS_ARM = 4


def overlay_keypoints(image: RasterImage, symbols: SymbolSet) -> RasterImage:
    """Copy of the image with a small cross at every extracted keypoint."""
    buf = np.array(image.pixels, copy=True)
    h, w = buf.shape[:2]

    def cross(u, v):
        ui, vi = int(round(u)), int(round(v))
        for d in range(-CROSS_ARM, CROSS_ARM + 1):
            if 0 <= vi < h and 0 <= ui + d < w:
                buf[vi, ui + d] = CROSS_COLOR
            if 0 <= vi + d < h and 0 <= ui < w:
                buf[vi + d, ui] = CROSS_COLOR

    for s in symbols.symbols:
        if isinstance(s, ArrowSymbol):
            for k in s.keypoints:
                cross(k.u, k.v)
        elif isinstance(s, CircleSymbol):
            cross(s.center.u, s.center.v)
    return RasterImage(buf)


def _svg_polyline(points, color, dash=None, width=2.0) -> str:
    pts = " ".join(f"{p[0]:.2f},{p[1]:.2f}" for p in points)
    dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline points="{pts}" fill="none" stroke="{color}" '
        f'stroke-width="{width}"{dash_attr} stroke-linecap="round"/>'
    )


def trajectory_svg(width: int, height: int, instructed_px, executed_px,
                   step_colors=None) -> str:
    """Vector plot of instructed (dashed) vs executed (solid) pixel polylines.

    ``instructed_px`` and ``executed_px`` are per-step lists of (N, 2)
    arrays in image coordinates.
    """
    default_colors = ["#00ff5e", "#00fff7", "#ff6a8a", "#ffd600", "#aa00ff"]
    colors = step_colors or default_colors
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#202020"/>',
    ]
    for i, poly in enumerate(instructed_px):
        if len(poly) >= 2:
            parts.append(_svg_polyline(poly, colors[i % len(colors)], dash="6 4", width=2.5))
    for i, poly in enumerate(executed_px):
        if len(poly) >= 2:
            parts.append(_svg_polyline(poly, "#ffffff", width=1.2))
    parts.append(
        '<g font-family="monospace" font-size="10" fill="#dddddd">'
        '<text x="8" y="14">dashed: instructed, per step color</text>'
        '<text x="8" y="26">solid: executed</text></g>'
    )
    parts.append("</svg>")
    return "\n".join(parts)
