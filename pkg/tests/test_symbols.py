import numpy as np
import pytest

from sketchplan.errors import AmbiguousHead, ComponentTooSmall, NotAnnular
from sketchplan.segmentation import mask_components, segment_by_color
from sketchplan.symbols import (
    classify_symbol,
    extract_arrow_keypoints,
    extract_circle_keypoints,
)
from sketchplan.types import RasterImage

from conftest import BG, arrow, circle, draw


def one_component(annotated):
    masks = segment_by_color(annotated)
    comps = mask_components(masks[0])
    assert len(comps) == 1
    return comps[0]


def bare_segment(blank, width=5.0):
    """Headless stroke: render a freehand polyline (no arrowhead)."""
    from sketchplan.strokes import SymbolDirective

    d = SymbolDirective("freehand", 1, ((60.0, 120.0), (240.0, 120.0)), width=width)
    annotated, _ = draw(blank, [d])
    return one_component(annotated)


class TestClassify:
    def test_ring_is_circle(self, blank):
        annotated, _ = draw(blank, [circle((160, 120), 40, width=5)])
        assert classify_symbol(one_component(annotated)) == "circle"

    def test_arrow_with_triangle_head(self, blank):
        annotated, _ = draw(blank, [arrow([(60, 120), (240, 120)])])
        assert classify_symbol(one_component(annotated)) == "arrow"

    def test_speck_too_small(self, blank):
        buf = np.array(blank.pixels, copy=True)
        buf[100:102, 100:105] = (0, 255, 94)  # 10 pixels
        comp = one_component(RasterImage(buf))
        with pytest.raises(ComponentTooSmall):
            classify_symbol(comp)

    def test_bare_segment_is_unknown(self, blank):
        assert classify_symbol(bare_segment(blank)) == "unknown"

    def test_filled_disk_is_unknown(self, blank):
        buf = np.array(blank.pixels, copy=True)
        vs, us = np.mgrid[0:240, 0:320]
        buf[(us - 160) ** 2 + (vs - 120) ** 2 <= 30**2] = (0, 255, 94)
        assert classify_symbol(one_component(RasterImage(buf))) == "unknown"


class TestArrowExtraction:
    def test_horizontal_geometric_arrow(self, blank):
        annotated, truths = draw(blank, [arrow([(50, 100), (200, 100)])])
        sym = extract_arrow_keypoints(one_component(annotated))
        assert sym.start.u == pytest.approx(50, abs=3)
        assert sym.start.v == pytest.approx(100, abs=3)
        assert sym.end.u == pytest.approx(200, abs=3)
        assert sym.end.v == pytest.approx(100, abs=3)
        us = [k.u for k in sym.keypoints]
        assert all(b > a for a, b in zip(us, us[1:]))
        assert sym.style == "geometric"

    def test_bare_segment_ambiguous_head(self, blank):
        with pytest.raises(AmbiguousHead):
            extract_arrow_keypoints(bare_segment(blank))

    def test_c_shaped_arrow_waypoints_follow_arc(self, blank):
        # half-circle arc: length error of the keypoint polyline under 10%
        pts = [(220.0, 60.0), (100.0, 120.0), (220.0, 180.0)]
        annotated, truths = draw(blank, [arrow(pts, width=5)])
        sym = extract_arrow_keypoints(one_component(annotated))
        kps = np.array([[k.u, k.v] for k in sym.keypoints])
        poly_len = np.linalg.norm(np.diff(kps, axis=0), axis=1).sum()
        assert poly_len == pytest.approx(truths[0].arc_length, rel=0.10)
        # waypoint order matches arc order on the generator curve
        curve = truths[0].curve
        arcs = np.concatenate([[0], np.cumsum(np.linalg.norm(np.diff(curve, axis=0), axis=1))])
        pos = []
        for k in sym.keypoints:
            d = np.linalg.norm(curve - np.array([k.u, k.v]), axis=1)
            pos.append(arcs[int(np.argmin(d))])
        assert all(b > a for a, b in zip(pos, pos[1:]))

    def test_waypoint_cap(self, blank):
        annotated, _ = draw(blank, [arrow([(40, 120), (280, 120)])])
        sym = extract_arrow_keypoints(one_component(annotated), max_waypoints=8)
        assert len(sym.keypoints) <= 10
        sym3 = extract_arrow_keypoints(one_component(annotated), max_waypoints=3)
        assert len(sym3.keypoints) <= 5

    def test_containment_in_dilated_bbox(self, blank, rng):
        for k in range(10):
            p0 = rng.uniform([50, 50], [270, 190])
            p1 = rng.uniform([50, 50], [270, 190])
            if np.linalg.norm(p1 - p0) < 80:
                continue
            annotated, _ = draw(blank, [arrow([tuple(p0), tuple(p1)], width=4, seed=k)])
            comp = one_component(annotated)
            sym = extract_arrow_keypoints(comp)
            u0, v0, u1, v1 = comp.bbox
            for kp in sym.keypoints:
                assert u0 - 2 <= kp.u <= u1 + 2
                assert v0 - 2 <= kp.v <= v1 + 2

    def test_style_hint_respected(self, blank):
        annotated, _ = draw(blank, [arrow([(50, 100), (200, 100)])])
        sym = extract_arrow_keypoints(one_component(annotated), style_hint="loose")
        assert sym.style == "loose"


class TestCircleExtraction:
    def test_ring_center_and_radius(self, blank):
        annotated, _ = draw(blank, [circle((120, 80), 30, width=5)])
        sym = extract_circle_keypoints(one_component(annotated))
        assert sym.center.u == pytest.approx(120, abs=2)
        assert sym.center.v == pytest.approx(80, abs=2)
        assert sym.radius == pytest.approx(30, abs=2)

    def test_filled_disk_not_annular(self, blank):
        buf = np.array(blank.pixels, copy=True)
        vs, us = np.mgrid[0:240, 0:320]
        buf[(us - 160) ** 2 + (vs - 120) ** 2 <= 30**2] = (0, 255, 94)
        with pytest.raises(NotAnnular):
            extract_circle_keypoints(one_component(RasterImage(buf)))

    def test_ellipse_center_is_hole_centroid(self, blank):
        """Hand-drawn wobble: an ellipse with 1.3 axis ratio is accepted and
        its center equals the brute-force average of the hole pixels."""
        buf = np.array(blank.pixels, copy=True)
        vs, us = np.mgrid[0:240, 0:320]
        r2 = ((us - 160) / 39.0) ** 2 + ((vs - 120) / 30.0) ** 2
        ring = (r2 <= 1.0) & (r2 >= 0.70)
        buf[ring] = (0, 255, 94)
        comp = one_component(RasterImage(buf))
        assert classify_symbol(comp) == "circle"
        sym = extract_circle_keypoints(comp)
        hole = (r2 < 0.70)
        cu = us[hole].mean()
        cv = vs[hole].mean()
        assert sym.center.u == pytest.approx(cu, abs=1.0)
        assert sym.center.v == pytest.approx(cv, abs=1.0)


def test_degenerate_arrow_short_path(blank):
    from sketchplan.errors import DegenerateArrow

    # a solid blob big enough to pass the size gate, skeleton shorter than 5 px
    buf = np.array(blank.pixels, copy=True)
    buf[100:107, 100:107] = (0, 255, 94)
    comp = one_component(RasterImage(buf))
    assert classify_symbol(comp) == "unknown"
    with pytest.raises(DegenerateArrow):
        extract_arrow_keypoints(comp)
