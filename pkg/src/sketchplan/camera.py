"""Pinhole back-projection between pixel keypoints and camera-frame 3D."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, DepthUnavailable
from .types import DepthMap, Keypoint2, Keypoint3

HOLE_FILL_MAX_WINDOW = 15
HOLE_FILL_MIN_SAMPLES = 3


@dataclass(frozen=True)
class Intrinsics:
    """Pinhole intrinsics in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    def to_json(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_json(cls, d) -> "Intrinsics":
        return cls(float(d["fx"]), float(d["fy"]), float(d["cx"]), float(d["cy"]))


def depth_at(depth: DepthMap, u: float, v: float) -> float:
    """Depth at a pixel, filling holes from the neighborhood median.

    Uses the smallest odd window (3, 5, ..., 15) centered on the pixel that
    contains at least three finite depths.  Raises DepthUnavailable when even
    the largest window is empty enough to fail.
    """
    ui, vi = int(round(u)), int(round(v))
    if not (0 <= ui < depth.width and 0 <= vi < depth.height):
        raise DepthUnavailable(f"pixel ({u:.1f}, {v:.1f}) outside the depth map")
    d = depth.depths[vi, ui]
    if np.isfinite(d):
        return float(d)
    for half in range(1, HOLE_FILL_MAX_WINDOW // 2 + 1):
        window = depth.depths[
            max(0, vi - half) : vi + half + 1, max(0, ui - half) : ui + half + 1
        ]
        finite = window[np.isfinite(window)]
        if finite.size >= HOLE_FILL_MIN_SAMPLES:
            return float(np.median(finite))
    raise DepthUnavailable(
        f"no finite depth within a {HOLE_FILL_MAX_WINDOW}x{HOLE_FILL_MAX_WINDOW} "
        f"window of ({u:.1f}, {v:.1f})"
    )


def backproject(kp: Keypoint2, depth: DepthMap, K: Intrinsics) -> Keypoint3:
    """Lift a pixel keypoint to camera-frame meters using the depth map."""
    d = depth_at(depth, kp.u, kp.v)
    x = (kp.u - K.cx) * d / K.fx
    y = (kp.v - K.cy) * d / K.fy
    return Keypoint3(x, y, d, kp.role)


def project(p: Keypoint3, K: Intrinsics) -> Keypoint2:
    """Project a camera-frame point back to (real-valued) pixels."""
    if p.z <= 0:
        raise BehindCamera(f"point with z={p.z} is behind the camera")
    u = K.fx * p.x / p.z + K.cx
    v = K.fy * p.y / p.z + K.cy
    return Keypoint2(u, v, p.role)


def backproject_grid(depth: DepthMap, K: Intrinsics) -> np.ndarray:
    """Vectorized lift of the whole depth map: (H, W, 3), NaN at holes."""
    d = np.asarray(depth.depths)
    us = np.arange(depth.width, dtype=np.float64)[None, :]
    vs = np.arange(depth.height, dtype=np.float64)[:, None]
    x = (us - K.cx) * d / K.fx
    y = (vs - K.cy) * d / K.fy
    return np.stack([x, y, d], axis=2)


def project_points(points: np.ndarray, K: Intrinsics) -> np.ndarray:
    """Vectorized projection of (N, 3) camera-frame points to (N, 2) pixels."""
    pts = np.asarray(points, dtype=np.float64)
    if (pts[:, 2] <= 0).any():
        raise BehindCamera("projection input contains points with z <= 0")
    u = K.fx * pts[:, 0] / pts[:, 2] + K.cx
    v = K.fy * pts[:, 1] / pts[:, 2] + K.cy
    return np.stack([u, v], axis=1)
