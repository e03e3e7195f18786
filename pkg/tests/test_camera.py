import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sketchplan.camera import (
    Intrinsics,
    backproject,
    backproject_grid,
    depth_at,
    project,
    project_points,
)
from sketchplan.errors import BehindCamera, DepthUnavailable
from sketchplan.types import DepthMap, Keypoint2, Keypoint3

K = Intrinsics(600, 600, 320, 240)


def flat_depth(value=0.5, w=640, h=480):
    return DepthMap(np.full((h, w), value))


def test_principal_point_maps_to_axis():
    p = backproject(Keypoint2(320, 240, "start"), flat_depth(0.5), K)
    assert (p.x, p.y, p.z) == (0.0, 0.0, 0.5)


def test_hand_checked_offset():
    # (920-320) * 0.5 / 600 = 0.5
    p = backproject(Keypoint2(920, 240, "end"), DepthMap(np.full((480, 1000), 0.5)), K)
    assert p.x == pytest.approx(0.5, abs=1e-12)
    assert p.y == 0.0
    assert p.z == 0.5


def test_hole_filled_with_median_of_three():
    d = np.full((9, 9), np.nan)
    d[4, 3], d[3, 4], d[5, 5] = 0.4, 0.5, 0.6
    val = depth_at(DepthMap(d), 4, 4)
    assert val == 0.5


def test_hole_window_grows_until_enough_samples():
    d = np.full((21, 21), np.nan)
    d[10 - 4, 10], d[10 + 4, 10], d[10, 10 + 4] = 1.0, 2.0, 3.0  # 9x9 window
    assert depth_at(DepthMap(d), 10, 10) == 2.0


def test_depth_unavailable():
    d = np.full((40, 40), np.nan)
    with pytest.raises(DepthUnavailable):
        backproject(Keypoint2(20, 20, "start"), DepthMap(d), K)


def test_project_axis():
    kp = project(Keypoint3(0, 0, 1, "start"), K)
    assert (kp.u, kp.v) == (320.0, 240.0)


def test_behind_camera():
    with pytest.raises(ValueError):
        Keypoint3(0, 0, -1, "start")  # the type itself forbids z <= 0
    with pytest.raises(BehindCamera):
        project_points(np.array([[0.0, 0.0, -1.0]]), K)


@settings(max_examples=200, deadline=None)
@given(
    u=st.integers(0, 639),
    v=st.integers(0, 479),
    d=st.floats(0.05, 10.0),
    fx=st.floats(100.0, 2000.0),
    fy=st.floats(100.0, 2000.0),
)
def test_roundtrip_identity(u, v, d, fx, fy):
    K2 = Intrinsics(fx, fy, 320, 240)
    depth = DepthMap(np.full((480, 640), d))
    p = backproject(Keypoint2(u, v, "waypoint"), depth, K2)
    kp = project(p, K2)
    assert kp.u == pytest.approx(u, abs=1e-9)
    assert kp.v == pytest.approx(v, abs=1e-9)


def test_scale_linearity():
    p1 = backproject(Keypoint2(400, 300, "start"), flat_depth(0.7), K)
    p2 = backproject(Keypoint2(400, 300, "start"), flat_depth(1.4), K)
    assert p2.x == pytest.approx(2 * p1.x, rel=1e-12)
    assert p2.y == pytest.approx(2 * p1.y, rel=1e-12)
    assert p2.z == pytest.approx(2 * p1.z, rel=1e-12)


def test_hole_fill_deterministic(rng):
    d = np.full((31, 31), np.nan)
    coords = rng.integers(0, 31, size=(120, 2))
    d[coords[:, 0], coords[:, 1]] = rng.uniform(0.2, 2.0, size=120)
    dm = DepthMap(d)
    probes = [(u, v) for u in range(6, 25, 4) for v in range(6, 25, 4)]
    vals1 = [depth_at(dm, u, v) for u, v in probes]
    vals2 = [depth_at(dm, u, v) for u, v in probes]
    assert vals1 == vals2


def test_grid_matches_scalar():
    d = flat_depth(0.8, w=32, h=24)
    grid = backproject_grid(d, K)
    p = backproject(Keypoint2(17, 11, "start"), d, K)
    assert np.allclose(grid[11, 17], [p.x, p.y, p.z], atol=1e-12)
