"""Procedural sketch rendering: anti-aliased arrows and circles with exact
ground-truth keypoints.

The generator is the oracle for the parser tests, so the geometry is kept
honest: ground truth is always the scripted control points, never re-derived
from pixels.  Stroke noise for the loose style is built from seeded integers
blended with a polynomial smoothstep, so identical seeds reproduce identical
pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import SymbolOutOfBounds
from .types import (
    DEFAULT_PALETTE,
    STYLE_GEOMETRIC,
    STYLE_LOOSE,
    RasterImage,
)

PRIM_ARROW = "arrow"
PRIM_CIRCLE = "circle"
PRIM_FREEHAND = "freehand"

HEAD_BASE_WIDTHS = 4.0  # triangle base, in stroke widths
HEAD_LENGTH_WIDTHS = 5.0  # triangle height / barb length, in stroke widths
BARB_ANGLE = math.radians(30.0)


@dataclass(frozen=True)
class SymbolDirective:
    """One symbol to draw: primitive, step ordinal, control geometry, style."""

    primitive: str
    ordinal: int
    points: tuple  # ((u, v), ...); circles use a single center point
    radius: float = 0.0
    style: str = STYLE_GEOMETRIC
    width: float = 5.0
    jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.primitive not in (PRIM_ARROW, PRIM_CIRCLE, PRIM_FREEHAND):
            raise ValueError(f"unknown primitive {self.primitive!r}")
        if self.width < 1:
            raise ValueError("stroke width must be >= 1 px")
        pts = tuple((float(u), float(v)) for u, v in self.points)
        if self.primitive == PRIM_CIRCLE:
            if len(pts) != 1:
                raise ValueError("circle directive takes exactly one center point")
            if self.radius <= 0:
                raise ValueError("circle radius must be positive")
        elif len(pts) < 2:
            raise ValueError("arrow/freehand directive needs >= 2 control points")
        object.__setattr__(self, "points", pts)


@dataclass(frozen=True)
class SketchScript:
    directives: tuple
    palette: tuple = DEFAULT_PALETTE

    def __post_init__(self):
        object.__setattr__(self, "directives", tuple(self.directives))
        object.__setattr__(self, "palette", tuple(self.palette))


@dataclass(frozen=True)
class SymbolTruth:
    """Ground truth for one rendered symbol (script endpoints, never pixels)."""

    primitive: str
    ordinal: int
    style: str
    start: tuple | None = None
    end: tuple | None = None
    center: tuple | None = None
    radius: float = 0.0
    arc_length: float = 0.0
    curve: np.ndarray | None = None

    def to_json(self) -> dict:
        d = {
            "primitive": self.primitive,
            "ordinal": self.ordinal,
            "style": self.style,
            "arc_length": self.arc_length,
        }
        if self.start is not None:
            d["start"] = list(self.start)
            d["end"] = list(self.end)
        if self.center is not None:
            d["center"] = list(self.center)
            d["radius"] = self.radius
        return d


# ---------------------------------------------------------------------------
# curve construction
# ---------------------------------------------------------------------------

def _quad_bezier(a, b, c, n: int) -> np.ndarray:
    t = np.linspace(0.0, 1.0, n)[:, None]
    return (1 - t) ** 2 * a + 2 * t * (1 - t) * b + t**2 * c


def blend_curve(points, spacing: float = 0.4) -> np.ndarray:
    """Smooth curve through the first and last control point.

    Consecutive quadratic pieces join at control-segment midpoints, which
    keeps the tangent continuous; two control points degrade to a straight
    line.  Sample spacing is approximately ``spacing`` pixels.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 2:
        n = max(2, int(np.linalg.norm(pts[1] - pts[0]) / spacing) + 1)
        t = np.linspace(0.0, 1.0, n)[:, None]
        return pts[0] * (1 - t) + pts[1] * t
    # piece anchors: start, midpoints of interior control segments, end
    anchors = [pts[0]]
    for i in range(1, len(pts) - 2):
        anchors.append(0.5 * (pts[i] + pts[i + 1]))
    anchors.append(pts[-1])
    pieces = []
    for i in range(len(anchors) - 1):
        a, c = anchors[i], anchors[i + 1]
        b = pts[i + 1]
        approx = np.linalg.norm(b - a) + np.linalg.norm(c - b)
        n = max(3, int(approx / spacing) + 1)
        seg = _quad_bezier(a, b, c, n)
        pieces.append(seg if i == 0 else seg[1:])
    return np.concatenate(pieces, axis=0)


def _smooth_noise(arcs: np.ndarray, total: float, amplitude: float, rng, spacing: float = 24.0):
    """Seeded smooth noise over arc length; integer knots, smoothstep blend."""
    if amplitude <= 0 or total <= 0:
        return np.zeros(len(arcs))
    n_knots = max(3, int(total / spacing) + 2)
    knots = rng.integers(-32768, 32768, size=n_knots).astype(np.float64) / 32768.0
    pos = arcs / spacing
    k = np.minimum(pos.astype(int), n_knots - 2)
    t = pos - k
    u = t * t * (3.0 - 2.0 * t)
    vals = knots[k] * (1.0 - u) + knots[k + 1] * u
    # taper to zero at both ends so stroke tips stay on the control points
    ramp = np.minimum(1.0, np.minimum(arcs, total - arcs) / max(1e-9, 0.1 * total))
    return vals * amplitude * ramp


def _periodic_noise(thetas: np.ndarray, amplitude: float, rng, n_knots: int = 12):
    if amplitude <= 0:
        return np.zeros(len(thetas))
    knots = rng.integers(-32768, 32768, size=n_knots).astype(np.float64) / 32768.0
    pos = thetas / (2 * math.pi) * n_knots
    k = pos.astype(int) % n_knots
    t = pos - np.floor(pos)
    u = t * t * (3.0 - 2.0 * t)
    return (knots[k] * (1.0 - u) + knots[(k + 1) % n_knots] * u) * amplitude


def _displace_normal(curve: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    grad = np.gradient(curve, axis=0)
    norm = np.linalg.norm(grad, axis=1, keepdims=True)
    norm[norm == 0] = 1.0
    tang = grad / norm
    normal = np.stack([-tang[:, 1], tang[:, 0]], axis=1)
    return curve + normal * offsets[:, None]


def _arc_lengths(curve: np.ndarray) -> np.ndarray:
    steps = np.linalg.norm(np.diff(curve, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(steps)])


# ---------------------------------------------------------------------------
# rasterization
# ---------------------------------------------------------------------------

def _stroke_alpha(shape, polyline: np.ndarray, width: float) -> tuple:
    """AA coverage of a stroked polyline; returns (alpha, (v0, u0)) local patch.

    Coverage is 1 where a pixel sits more than half the AA band inside the
    stroke, 0 outside, with a 1 px linear ramp across the boundary, so core
    pixels take the palette color exactly.
    """
    h, w = shape
    half = width / 2.0
    u0 = max(0, int(np.floor(polyline[:, 0].min() - half - 2)))
    u1 = min(w - 1, int(np.ceil(polyline[:, 0].max() + half + 2)))
    v0 = max(0, int(np.floor(polyline[:, 1].min() - half - 2)))
    v1 = min(h - 1, int(np.ceil(polyline[:, 1].max() + half + 2)))
    if u1 < u0 or v1 < v0:
        return np.zeros((0, 0)), (0, 0)
    us, vs = np.meshgrid(np.arange(u0, u1 + 1), np.arange(v0, v1 + 1))
    grid = np.stack([us.ravel(), vs.ravel()], axis=1).astype(float)
    dist, _ = cKDTree(polyline).query(grid, k=1)
    alpha = np.clip(half + 0.5 - dist, 0.0, 1.0).reshape(vs.shape)
    return alpha, (v0, u0)


def _triangle_alpha(shape, verts: np.ndarray) -> tuple:
    """AA coverage of a filled triangle via edge signed distances."""
    h, w = shape
    u0 = max(0, int(np.floor(verts[:, 0].min() - 2)))
    u1 = min(w - 1, int(np.ceil(verts[:, 0].max() + 2)))
    v0 = max(0, int(np.floor(verts[:, 1].min() - 2)))
    v1 = min(h - 1, int(np.ceil(verts[:, 1].max() + 2)))
    if u1 < u0 or v1 < v0:
        return np.zeros((0, 0)), (0, 0)
    us, vs = np.meshgrid(np.arange(u0, u1 + 1), np.arange(v0, v1 + 1))
    # signed area orientation
    a, b, c = verts
    area = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    sign = 1.0 if area > 0 else -1.0
    sdf = np.full(us.shape, -np.inf)
    for p, q in ((a, b), (b, c), (c, a)):
        e = q - p
        ln = math.hypot(e[0], e[1])
        if ln == 0:
            continue
        d = ((us - p[0]) * e[1] - (vs - p[1]) * e[0]) * sign / ln
        sdf = np.maximum(sdf, d)
    alpha = np.clip(0.5 - sdf, 0.0, 1.0)
    return alpha, (v0, u0)


def _composite(buf: np.ndarray, alpha: np.ndarray, corner, rgb) -> None:
    if alpha.size == 0:
        return
    v0, u0 = corner
    hh, ww = alpha.shape
    patch = buf[v0 : v0 + hh, u0 : u0 + ww].astype(np.float64)
    a = alpha[:, :, None]
    color = np.asarray(rgb, dtype=np.float64)
    buf[v0 : v0 + hh, u0 : u0 + ww] = np.clip(
        np.rint(a * color + (1.0 - a) * patch), 0, 255
    ).astype(np.uint8)


def _check_bounds(points: np.ndarray, shape, what: str) -> None:
    h, w = shape
    if (
        points[:, 0].min() < 0
        or points[:, 0].max() > w - 1
        or points[:, 1].min() < 0
        or points[:, 1].max() > h - 1
    ):
        raise SymbolOutOfBounds(f"{what} leaves the {w}x{h} image")


# ---------------------------------------------------------------------------
# symbol rendering
# ---------------------------------------------------------------------------

def _render_arrow(buf, directive: SymbolDirective, rgb) -> SymbolTruth:
    shape = buf.shape[:2]
    pts = np.asarray(directive.points, dtype=float)
    _check_bounds(pts, shape, "arrow control points")
    curve = blend_curve(pts)
    rng = np.random.Generator(np.random.PCG64(directive.seed))
    if directive.style == STYLE_LOOSE and directive.jitter > 0:
        arcs = _arc_lengths(curve)
        curve = _displace_normal(curve, _smooth_noise(arcs, arcs[-1], directive.jitter, rng))
    arcs = _arc_lengths(curve)
    total = arcs[-1]
    w = directive.width
    tip = curve[-1]
    # terminal tangent from the last couple of stroke widths of the curve
    back = np.searchsorted(arcs, max(0.0, total - 2.0 * w))
    tangent = tip - curve[min(back, len(curve) - 2)]
    tn = np.linalg.norm(tangent)
    tangent = tangent / tn if tn > 0 else np.array([1.0, 0.0])
    normal = np.array([-tangent[1], tangent[0]])

    if directive.style == STYLE_GEOMETRIC and directive.primitive == PRIM_ARROW:
        base = tip - tangent * (HEAD_LENGTH_WIDTHS * w)
        verts = np.array(
            [tip, base + normal * (HEAD_BASE_WIDTHS * w / 2), base - normal * (HEAD_BASE_WIDTHS * w / 2)]
        )
        _check_bounds(verts, shape, "arrow head")
        # shaft stops at the triangle base so the apex stays crisp
        shaft_end = np.searchsorted(arcs, max(0.0, total - HEAD_LENGTH_WIDTHS * w))
        shaft = curve[: max(2, shaft_end + 1)]
        alpha, corner = _stroke_alpha(shape, shaft, w)
        _composite(buf, alpha, corner, rgb)
        alpha, corner = _triangle_alpha(shape, verts)
        _composite(buf, alpha, corner, rgb)
    else:
        alpha, corner = _stroke_alpha(shape, curve, w)
        _composite(buf, alpha, corner, rgb)
        if directive.primitive == PRIM_ARROW:
            barb_len = HEAD_LENGTH_WIDTHS * w
            for side in (1.0, -1.0):
                ang = side * BARB_ANGLE
                rot = np.array(
                    [[math.cos(ang), -math.sin(ang)], [math.sin(ang), math.cos(ang)]]
                )
                barb_dir = rot @ (-tangent)
                barb = np.stack([tip, tip + barb_dir * barb_len])
                _check_bounds(barb, shape, "arrow barb")
                n = max(2, int(barb_len / 0.4))
                t = np.linspace(0, 1, n)[:, None]
                line = barb[0] * (1 - t) + barb[1] * t
                alpha, corner = _stroke_alpha(shape, line, w)
                _composite(buf, alpha, corner, rgb)

    return SymbolTruth(
        primitive=directive.primitive,
        ordinal=directive.ordinal,
        style=directive.style,
        start=tuple(pts[0]),
        end=tuple(pts[-1]),
        arc_length=float(total),
        curve=curve,
    )


def _render_circle(buf, directive: SymbolDirective, rgb) -> SymbolTruth:
    shape = buf.shape[:2]
    c = np.asarray(directive.points[0], dtype=float)
    r = float(directive.radius)
    w = directive.width
    rng = np.random.Generator(np.random.PCG64(directive.seed))
    n = max(64, int(2 * math.pi * r / 0.4))
    thetas = np.linspace(0.0, 2 * math.pi, n, endpoint=False)
    radii = np.full(n, r)
    if directive.style == STYLE_LOOSE and directive.jitter > 0:
        radii = radii + _periodic_noise(thetas, directive.jitter, rng)
    ring = np.stack([c[0] + radii * np.cos(thetas), c[1] + radii * np.sin(thetas)], axis=1)
    ring = np.concatenate([ring, ring[:1]], axis=0)
    _check_bounds(ring, shape, "circle")
    alpha, corner = _stroke_alpha(shape, ring, w)
    _composite(buf, alpha, corner, rgb)
    return SymbolTruth(
        primitive=PRIM_CIRCLE,
        ordinal=directive.ordinal,
        style=directive.style,
        center=tuple(c),
        radius=r,
        arc_length=float(2 * math.pi * r),
    )


def render_sketch(clean: RasterImage, script: SketchScript) -> tuple:
    """Draw every directive over ``clean``; returns (annotated, truths).

    Symbols are composited in script order with anti-aliased edges; stroke
    cores carry the palette RGB exactly.  Raises SymbolOutOfBounds when a
    directive's geometry does not fit the image.
    """
    by_ordinal = {c.ordinal: c for c in script.palette}
    buf = np.array(clean.pixels, dtype=np.uint8, copy=True)
    truths = []
    for d in script.directives:
        if d.ordinal not in by_ordinal:
            raise ValueError(f"directive ordinal {d.ordinal} not in the palette")
        rgb = by_ordinal[d.ordinal].rgb
        if d.primitive == PRIM_CIRCLE:
            truths.append(_render_circle(buf, d, rgb))
        else:
            truths.append(_render_arrow(buf, d, rgb))
    return RasterImage(buf), tuple(truths)


def directives_from_strokes(strokes, palette=DEFAULT_PALETTE) -> SketchScript:
    """Convert UI stroke records into renderer directives.

    A stroke is ``{color_ordinal, width_px, points, primitive_hint}``; the
    hint selects arrow (blended shaft + triangle head), circle (fit to the
    sampled drag points) or freehand (raw polyline, no head).
    """
    directives = []
    for s in strokes:
        hint = s.get("primitive_hint") or PRIM_FREEHAND
        pts = [(float(p[0]), float(p[1])) for p in s["points"]]
        width = float(s.get("width_px", 5))
        ordinal = int(s["color_ordinal"])
        if hint == PRIM_CIRCLE:
            arr = np.asarray(pts)
            center = arr.mean(axis=0)
            radius = float(np.linalg.norm(arr - center, axis=1).mean())
            directives.append(
                SymbolDirective(
                    PRIM_CIRCLE,
                    ordinal,
                    (tuple(center),),
                    radius=max(radius, 1.0),
                    width=width,
                )
            )
        else:
            prim = PRIM_ARROW if hint == PRIM_ARROW else PRIM_FREEHAND
            directives.append(SymbolDirective(prim, ordinal, tuple(pts), width=width))
    return SketchScript(tuple(directives), palette)
