"""Classify stroke components into arrows/circles and extract keypoints."""

from __future__ import annotations

import numpy as np
from scipy import ndimage

from .errors import AmbiguousHead, ComponentTooSmall, DegenerateArrow, NotAnnular
from .segmentation import Component
from .skeleton import arc_lengths, main_path, point_at_arc, prune_spurs, skeletonize
from .types import (
    ROLE_CENTER,
    ROLE_END,
    ROLE_START,
    ROLE_WAYPOINT,
    STYLE_GEOMETRIC,
    STYLE_LOOSE,
    ArrowSymbol,
    CircleSymbol,
    Keypoint2,
)

MIN_STROKE_PIXELS = 30
MAX_WAYPOINTS = 8
HEAD_DENSITY_RATIO = 1.2
MIN_ARROW_ARC = 5.0
MIN_HOLE_FRACTION = 0.2

SYMBOL_ARROW = "arrow"
SYMBOL_CIRCLE = "circle"
SYMBOL_UNKNOWN = "unknown"

_CROSS = ndimage.generate_binary_structure(2, 1)  # 4-connectivity


def _enclosed_holes(mask: np.ndarray):
    """Labeled background regions fully enclosed by the component.

    Background is labeled 4-connected (the dual of the 8-connected
    foreground); labels touching the bounding-box border are open space,
    the rest are holes.
    """
    bg, count = ndimage.label(~mask, structure=_CROSS)
    if count == 0:
        return np.zeros_like(bg), []
    border = np.unique(
        np.concatenate([bg[0, :], bg[-1, :], bg[:, 0], bg[:, -1]])
    )
    open_ids = set(int(i) for i in border if i != 0)
    holes = [i for i in range(1, count + 1) if i not in open_ids]
    return bg, holes


def _stroke_width(mask: np.ndarray, skel_points: np.ndarray) -> float:
    """Median stroke width: twice the medial-axis distance to the boundary."""
    edt = ndimage.distance_transform_edt(mask)
    if len(skel_points) == 0:
        return 1.0
    vals = edt[skel_points[:, 0], skel_points[:, 1]]
    return float(max(1.0, 2.0 * np.median(vals)))


def _ink_density(coords: np.ndarray, point: np.ndarray, radius: float) -> int:
    d2 = ((coords - point[None, :]).astype(float) ** 2).sum(axis=1)
    return int((d2 <= radius * radius).sum())


class _ArrowAnalysis:
    """Shared path/head analysis used by both classification and extraction.

    All coordinates here live in the component's local bitmap frame; callers
    translate back to image coordinates with ``comp.offset``.
    """

    def __init__(self, comp: Component):
        self.comp = comp
        vs, us = np.nonzero(comp.mask)
        self.local_coords = np.stack([vs, us], axis=1)
        skel = skeletonize(comp.mask)
        self.raw_skeleton = skel  # keeps head junctions pruning may dissolve
        self.width = _stroke_width(comp.mask, skel.points)
        pruned = prune_spurs(skel, max_len=max(3.0, self.width))
        if len(pruned.points) == 0:
            pruned = skel
        self.skeleton = pruned
        self.path = main_path(pruned)
        self.arcs = arc_lengths(self.path)
        self.length = float(self.arcs[-1]) if len(self.arcs) else 0.0
        self._head_is_last = None
        self._density_ratio = None

    def _density_at_ends(self):
        # Probe at two retractions from each end and keep the denser reading:
        # thinning can leave the path end anywhere inside an arrowhead, and a
        # probe pinned to the extreme tip would sit in locally thin ink.
        r = 1.5 * self.width
        d_first = d_last = 0
        for retract in (r, 2.0 * r):
            retract = min(retract, self.length / 3.0)
            p_first = point_at_arc(self.path, self.arcs, retract).astype(float)
            p_last = point_at_arc(self.path, self.arcs, self.length - retract).astype(float)
            d_first = max(d_first, _ink_density(self.local_coords, p_first, r))
            d_last = max(d_last, _ink_density(self.local_coords, p_last, r))
        return d_first, d_last

    def head_analysis(self):
        """Returns (head_is_last_end, density_ratio)."""
        if self._head_is_last is None:
            d_first, d_last = self._density_at_ends()
            lo = max(1, min(d_first, d_last))
            self._density_ratio = max(d_first, d_last) / lo
            self._head_is_last = d_last >= d_first
        return self._head_is_last, self._density_ratio

    def off_path_ok(self) -> bool:
        """Side branches are tolerated only near the head (arrowhead ink).

        Skeleton pixels within a pixel and a half of the path are the path
        itself: the geodesic cuts diagonal corners and leaves elbow pixels
        behind, which must not read as branches.
        """
        if len(self.path) == 0:
            return False
        from scipy.spatial import cKDTree

        d_path, _ = cKDTree(self.path.astype(float)).query(
            self.skeleton.points.astype(float), k=1
        )
        off = self.skeleton.points[d_path > 1.5]
        if len(off) == 0:
            return True
        head_is_last, _ = self.head_analysis()
        head_px = self.path[-1] if head_is_last else self.path[0]
        lim = 6.0 * self.width
        d = np.linalg.norm(off.astype(float) - head_px.astype(float), axis=1)
        return bool((d <= lim).all())


def classify_symbol(comp: Component, min_pixels: int = MIN_STROKE_PIXELS) -> str:
    """Classify one connected component as arrow, circle or unknown.

    A circle is a closed annulus (enclosed hole covering >= 20% of the
    bounding box); an arrow is a single skeleton path with a density-backed
    head at one end.  Raises ComponentTooSmall below ``min_pixels``.
    """
    if comp.pixel_count < min_pixels:
        raise ComponentTooSmall(
            f"component has {comp.pixel_count} px, below the minimum {min_pixels}"
        )
    bg, holes = _enclosed_holes(comp.mask)
    if holes:
        bbox_area = comp.mask.shape[0] * comp.mask.shape[1]
        hole_area = max(int((bg == h).sum()) for h in holes)
        if hole_area >= MIN_HOLE_FRACTION * bbox_area:
            return SYMBOL_CIRCLE
    analysis = _ArrowAnalysis(comp)
    if analysis.length < MIN_ARROW_ARC:
        return SYMBOL_UNKNOWN
    _, ratio = analysis.head_analysis()
    if ratio < HEAD_DENSITY_RATIO:
        return SYMBOL_UNKNOWN
    if not analysis.off_path_ok():
        return SYMBOL_UNKNOWN
    return SYMBOL_ARROW


def _head_anchor(analysis: _ArrowAnalysis, path: np.ndarray, arcs: np.ndarray) -> float:
    """Arc position where the head structure meets the shaft.

    Arrowheads leave a skeleton junction: barbs join the shaft right at the
    tip, triangle interiors branch near their center.  The last junction
    close to the final stretch of the path anchors the head (the geodesic
    may cut the corner past the junction pixel itself); a bare path end
    anchors itself.
    """
    from .skeleton import junction_points

    w = analysis.width
    total = arcs[-1]
    junc = junction_points(analysis.raw_skeleton).astype(float)
    if len(junc) == 0:
        return total
    for i in range(len(path) - 1, -1, -1):
        if arcs[i] < total - 7.0 * w:
            break
        d = np.linalg.norm(junc - path[i].astype(float), axis=1)
        if d.min() <= 1.6:
            return float(arcs[i])
    return total


def _tangent_at(path: np.ndarray, arcs: np.ndarray, s: float, w: float) -> np.ndarray | None:
    """Unit direction of the path at arc position s, averaged over ~3 widths."""
    a = point_at_arc(path, arcs, s - 1.0 * w).astype(float)
    b = point_at_arc(path, arcs, s - 4.0 * w).astype(float)
    t = a - b
    n = np.linalg.norm(t)
    if n < 1e-9:
        t = path[-1].astype(float) - path[0].astype(float)
        n = np.linalg.norm(t)
        if n < 1e-9:
            return None
    return t / n


def _extremal_ink(analysis: _ArrowAnalysis, origin: np.ndarray, direction: np.ndarray,
                  reach: float, halfwidth: float) -> np.ndarray | None:
    """Farthest component pixel from ``origin`` inside a forward cone."""
    rel = analysis.local_coords.astype(float) - origin[None, :]
    proj = rel @ direction
    perp = np.abs(rel @ np.array([-direction[1], direction[0]]))
    ok = (proj >= -1.0) & (proj <= reach) & (perp <= halfwidth)
    if not ok.any():
        return None
    cand = analysis.local_coords[ok]
    return cand[int(np.argmax(proj[ok]))].astype(float)


def _refine_tip(analysis: _ArrowAnalysis, path: np.ndarray, arcs: np.ndarray,
                pull_back: float) -> np.ndarray:
    """Head keypoint: extremal ink pixel along the shaft direction.

    Thinning wanders inside arrowheads (into a barb or toward a triangle
    corner), so the raw path end is not the drawn tip.  ``pull_back``
    compensates for the round cap on bare loose tips; solid triangle apexes
    sit on the ink extreme and need none.
    """
    w = analysis.width
    anchor = _head_anchor(analysis, path, arcs)
    origin = point_at_arc(path, arcs, anchor).astype(float)
    t = _tangent_at(path, arcs, anchor, w)
    if t is None:
        return path[-1].astype(float)
    tip = _extremal_ink(analysis, origin, t, reach=7.0 * w, halfwidth=2.5 * w)
    if tip is None:
        return path[-1].astype(float)
    return tip - t * pull_back


def _refine_tail(analysis: _ArrowAnalysis, path: np.ndarray, arcs: np.ndarray) -> np.ndarray:
    """Tail keypoint: thinning retracts diagonal stroke ends by up to two
    widths, so walk back out to the ink extreme and subtract the cap radius."""
    w = analysis.width
    t = _tangent_at(path[::-1], arcs[-1] - arcs[::-1], arcs[-1], w)
    if t is None:
        return path[0].astype(float)
    tail = _extremal_ink(analysis, path[0].astype(float), t, reach=3.5 * w, halfwidth=1.5 * w)
    if tail is None:
        return path[0].astype(float)
    return tail - t * (0.5 * w)


def extract_arrow_keypoints(
    comp: Component,
    style_hint: str | None = None,
    max_waypoints: int = MAX_WAYPOINTS,
) -> ArrowSymbol:
    """Extract ordered tail/waypoint/head keypoints from an arrow component.

    The head end is the denser path end (arrowheads thicken it); the tail is
    the opposite skeleton endpoint.  Waypoints are arc-length-uniform samples
    of the skeleton path between them.
    """
    analysis = _ArrowAnalysis(comp)
    if analysis.length < MIN_ARROW_ARC:
        raise DegenerateArrow(
            f"skeleton path is {analysis.length:.1f} px, need >= {MIN_ARROW_ARC}"
        )
    head_is_last, ratio = analysis.head_analysis()
    if ratio < HEAD_DENSITY_RATIO:
        raise AmbiguousHead(
            f"endpoint ink density ratio {ratio:.2f} below {HEAD_DENSITY_RATIO}"
        )
    path = analysis.path if head_is_last else analysis.path[::-1]
    arcs = arc_lengths(path)
    v0, u0 = comp.offset
    w = analysis.width

    style = style_hint or _guess_style(analysis, path, arcs)
    tip = _refine_tip(analysis, path, arcs, pull_back=0.5 * w if style == STYLE_LOOSE else 0.0)
    tail = _refine_tail(analysis, path, arcs)

    # waypoints come from the shaft only; stop short of the in-head portion
    anchor = _head_anchor(analysis, path, arcs)
    shaft_end = max(anchor - 1.0 * w, arcs[-1] * 0.5)
    m = min(max_waypoints, max(0, len(path) - 2))
    kps = [Keypoint2(float(tail[1] + u0), float(tail[0] + v0), ROLE_START)]
    prev = (float(tail[1]), float(tail[0]))
    for i in range(1, m + 1):
        s = shaft_end * i / (m + 1)
        p = point_at_arc(path, arcs, s)
        cur = (float(p[1]), float(p[0]))
        if cur == prev:  # short path, duplicate sample
            continue
        kps.append(Keypoint2(cur[0] + u0, cur[1] + v0, ROLE_WAYPOINT))
        prev = cur
    end = (float(tip[1]), float(tip[0]))
    if end == prev:
        kps.pop()
    kps.append(Keypoint2(end[0] + u0, end[1] + v0, ROLE_END))

    return ArrowSymbol(color=comp.color, keypoints=tuple(kps), style=style)


def _guess_style(analysis: _ArrowAnalysis, path: np.ndarray, arcs: np.ndarray) -> str:
    """Best-effort head style from three weak signals, majority vote.

    Solid triangle heads put the skeleton junction well behind the tip, read
    thick on the medial axis, and fill the cone behind the tip; barb heads do
    none of these cleanly.  The flag is informational; callers that know the
    style pass it as a hint instead.
    """
    w = analysis.width
    anchor = _head_anchor(analysis, path, arcs)
    t = _tangent_at(path, arcs, anchor, w)
    if t is None:
        return STYLE_LOOSE
    tip = _refine_tip(analysis, path, arcs, pull_back=0.0)
    votes = 0
    # 1: junction sits deep behind the tip
    anchor_px = point_at_arc(path, arcs, anchor).astype(float)
    if np.linalg.norm(tip - anchor_px) >= 2.5 * w:
        votes += 1
    # 2: medial axis thick behind the tip
    edt = ndimage.distance_transform_edt(analysis.comp.mask)
    probe = tip - t * 2.5 * w
    d = np.linalg.norm(analysis.local_coords.astype(float) - probe[None, :], axis=1)
    near = analysis.local_coords[d <= 1.5 * w]
    if len(near) and edt[near[:, 0], near[:, 1]].max() >= 1.15 * (0.5 * w) * 2:
        votes += 1
    # 3: the cone behind the tip is filled
    rel = analysis.local_coords.astype(float) - tip[None, :]
    proj = rel @ (-t)
    perp = np.abs(rel @ np.array([t[1], -t[0]]))
    band = (proj >= 2.0 * w) & (proj <= 3.5 * w) & (perp <= 0.4 * proj)
    area = 0.4 * ((3.5 * w) ** 2 - (2.0 * w) ** 2)
    if band.sum() / area >= 0.88:
        votes += 1
    return STYLE_GEOMETRIC if votes >= 2 else STYLE_LOOSE


def extract_circle_keypoints(comp: Component) -> CircleSymbol:
    """Center = enclosed-hole centroid, radius = mean distance to stroke pixels."""
    bg, holes = _enclosed_holes(comp.mask)
    if not holes:
        raise NotAnnular("component has no enclosed hole")
    areas = [(int((bg == h).sum()), h) for h in holes]
    _, hole_id = max(areas)
    vs, us = np.nonzero(bg == hole_id)
    v0, u0 = comp.offset
    cv, cu = float(vs.mean()) + v0, float(us.mean()) + u0
    pts = comp.coords.astype(float)  # image-frame (v, u)
    radius = float(np.hypot(pts[:, 0] - cv, pts[:, 1] - cu).mean())
    center = Keypoint2(cu, cv, ROLE_CENTER)
    return CircleSymbol(color=comp.color, center=center, radius=radius)
