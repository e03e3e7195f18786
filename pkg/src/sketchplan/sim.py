"""Deterministic kinematic world: analytic shapes, a free-flying gripper,
a virtual RGB-D camera, and task evaluation.

No physics engine: rays, signed distances and vertical settling are all
closed-form, so identical inputs give bit-identical renders and traces.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .camera import Intrinsics
from .errors import AlreadyHolding, NotHolding, NothingToGrasp, SceneFormatError
from .frechet import alignment_score
from .types import (
    DepthMap,
    Pose,
    RasterImage,
    quat_angle,
    quat_conjugate,
    quat_mul,
    quat_rotate,
    quat_to_matrix,
)

SHAPES = ("box", "sphere", "cylinder")

DEFAULT_GRASP_RADIUS = 0.03
APPROACH_OFFSET = 0.02  # meters toward the camera before descending


@dataclass
class SceneObject:
    id: str
    shape: str
    size: np.ndarray  # box: full extents; sphere: diameter; cylinder: (d, d, h)
    pose: Pose
    color: tuple
    graspable: bool = True

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise SceneFormatError(f"unknown shape {self.shape!r}")
        self.size = np.asarray(self.size, dtype=np.float64)
        if self.size.shape != (3,) or (self.size <= 0).any():
            raise SceneFormatError(f"object {self.id}: size must be 3 positive extents")
        self.color = tuple(int(c) for c in self.color)

    def copy(self) -> "SceneObject":
        return SceneObject(self.id, self.shape, self.size.copy(), self.pose,
                           self.color, self.graspable)

    def surface_distance(self, point) -> float:
        """Unsigned distance from a world point to this object's surface."""
        p = self.pose.inverse_transform_point(point)
        if self.shape == "sphere":
            return abs(float(np.linalg.norm(p)) - self.size[0] / 2)
        if self.shape == "box":
            q = np.abs(p) - self.size / 2
            outside = float(np.linalg.norm(np.maximum(q, 0)))
            inside = float(min(q.max(), 0.0))
            return abs(outside + inside)
        r, h = self.size[0] / 2, self.size[2] / 2
        dr = math.hypot(p[0], p[1]) - r
        dz = abs(p[2]) - h
        outside = math.hypot(max(dr, 0.0), max(dz, 0.0))
        inside = min(max(dr, dz), 0.0)
        return abs(outside + inside)

    def world_aabb(self) -> tuple:
        """Conservative axis-aligned bounds (lo, hi) in world coordinates."""
        half = self.size / 2
        corners = np.array(
            [[sx, sy, sz] for sx in (-half[0], half[0])
             for sy in (-half[1], half[1]) for sz in (-half[2], half[2])]
        )
        world = quat_rotate(self.pose.orientation, corners) + self.pose.position
        return world.min(axis=0), world.max(axis=0)

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "shape": self.shape,
            "size": self.size.tolist(),
            "position": self.pose.position.tolist(),
            "quaternion": self.pose.orientation.tolist(),
            "color": list(self.color),
            "graspable": self.graspable,
        }

    @classmethod
    def from_json(cls, d) -> "SceneObject":
        return cls(
            id=d["id"],
            shape=d["shape"],
            size=np.array(d["size"]),
            pose=Pose(np.array(d["position"]), np.array(d.get("quaternion", [1, 0, 0, 0]))),
            color=tuple(d["color"]),
            graspable=bool(d.get("graspable", True)),
        )


@dataclass
class GripperState:
    pose: Pose
    holding: str | None = None
    hold_rel: Pose | None = None  # gripper-frame pose of the held object


@dataclass
class CameraModel:
    pose: Pose  # camera-to-world
    intrinsics: Intrinsics
    width: int
    height: int

    def to_world(self, p_cam) -> np.ndarray:
        return self.pose.transform_point(p_cam)

    def to_camera(self, p_world) -> np.ndarray:
        return self.pose.inverse_transform_point(p_world)

    def up_direction(self) -> np.ndarray:
        """World direction from the scene toward the camera (reverse optical
        axis); for a top-down rig this is straight up."""
        return -quat_rotate(self.pose.orientation, np.array([0.0, 0.0, 1.0]))


@dataclass
class WorldState:
    objects: list
    gripper: GripperState
    camera: CameraModel
    support_z: float | None = 0.0
    plane_color: tuple = (120, 110, 100)
    background_color: tuple = (40, 40, 40)
    tick: int = 0

    def copy(self) -> "WorldState":
        g = GripperState(self.gripper.pose, self.gripper.holding, self.gripper.hold_rel)
        return WorldState(
            objects=[o.copy() for o in self.objects],
            gripper=g,
            camera=self.camera,
            support_z=self.support_z,
            plane_color=self.plane_color,
            background_color=self.background_color,
            tick=self.tick,
        )

    def object_by_id(self, oid: str) -> SceneObject:
        for o in self.objects:
            if o.id == oid:
                return o
        raise KeyError(f"no object with id {oid!r}")

    def held_object(self) -> SceneObject | None:
        return self.object_by_id(self.gripper.holding) if self.gripper.holding else None

    def move_gripper_to(self, position) -> None:
        """Teleport the gripper; a held object follows rigidly."""
        self.gripper.pose = Pose(np.asarray(position), self.gripper.pose.orientation)
        self._carry()

    def rotate_gripper(self, q_delta, pivot) -> None:
        """Rotate gripper pose about a world-frame pivot point."""
        g = self.gripper.pose
        pos = quat_rotate(q_delta, g.position - pivot) + np.asarray(pivot)
        self.gripper.pose = Pose(pos, quat_mul(q_delta, g.orientation))
        self._carry()

    def _carry(self) -> None:
        if self.gripper.holding:
            obj = self.object_by_id(self.gripper.holding)
            obj.pose = self.gripper.pose.compose(self.gripper.hold_rel)


# ---------------------------------------------------------------------------
# scene io
# ---------------------------------------------------------------------------

def validate_scene_colors(world: WorldState, palette, tolerance: float) -> None:
    """Scene colors must stay clear of the sketch palette so strokes segment."""
    named = [("background", world.background_color)]
    if world.support_z is not None:
        named.append(("support plane", world.plane_color))
    named += [(f"object {o.id}", o.color) for o in world.objects]
    for name, rgb in named:
        for pc in palette:
            if pc.distance(rgb) <= tolerance:
                raise SceneFormatError(
                    f"{name} color {rgb} is within segmentation tolerance "
                    f"{tolerance} of palette color {pc.rgb} (step {pc.ordinal})"
                )


def world_from_json(d, palette=None, tolerance: float = 100.0) -> WorldState:
    try:
        cam = d["camera"]
        camera = CameraModel(
            pose=Pose(np.array(cam["position"]), np.array(cam["quaternion"])),
            intrinsics=Intrinsics.from_json(cam["intrinsics"]),
            width=int(cam["width"]),
            height=int(cam["height"]),
        )
        plane = d.get("support_plane")
        objects = [SceneObject.from_json(o) for o in d.get("objects", [])]
        gd = d.get("gripper")
        if gd:
            gpose = Pose(np.array(gd["position"]), np.array(gd.get("quaternion", [1, 0, 0, 0])))
        else:
            # default: part-way from the camera toward the scene
            gpose = Pose(camera.pose.position - 0.15 * camera.up_direction())
        world = WorldState(
            objects=objects,
            gripper=GripperState(pose=gpose),
            camera=camera,
            support_z=None if plane is None else float(plane["z"]),
            plane_color=tuple(plane["color"]) if plane else (120, 110, 100),
            background_color=tuple(d.get("background_color", (40, 40, 40))),
        )
    except (KeyError, TypeError, ValueError) as err:
        raise SceneFormatError(f"bad scene JSON: {err}") from err
    ids = [o.id for o in world.objects]
    if len(set(ids)) != len(ids):
        raise SceneFormatError(f"duplicate object ids: {ids}")
    if palette is not None:
        validate_scene_colors(world, palette, tolerance)
    return world


def world_to_json(world: WorldState) -> dict:
    cam = world.camera
    return {
        "camera": {
            "position": cam.pose.position.tolist(),
            "quaternion": cam.pose.orientation.tolist(),
            "intrinsics": cam.intrinsics.to_json(),
            "width": cam.width,
            "height": cam.height,
        },
        "support_plane": (
            None if world.support_z is None
            else {"z": world.support_z, "color": list(world.plane_color)}
        ),
        "background_color": list(world.background_color),
        "gripper": {
            "position": world.gripper.pose.position.tolist(),
            "quaternion": world.gripper.pose.orientation.tolist(),
        },
        "objects": [o.to_json() for o in world.objects],
    }


def load_scene(path, palette=None, tolerance: float = 100.0) -> WorldState:
    with open(path) as f:
        return world_from_json(json.load(f), palette, tolerance)


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _ray_box(o, d, half):
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half[None, :] - o[None, :]) / d
        t2 = (half[None, :] - o[None, :]) / d
    tmin = np.nanmax(np.minimum(t1, t2), axis=1)
    tmax = np.nanmin(np.maximum(t1, t2), axis=1)
    hit = (tmax >= np.maximum(tmin, 1e-9)) & (tmax > 0)
    t = np.where(tmin > 1e-9, tmin, tmax)
    return np.where(hit, t, np.inf)


def _ray_sphere(o, d, radius):
    b = 2.0 * (o[None, :] * d).sum(axis=1)
    a = (d * d).sum(axis=1)
    c = float((o * o).sum()) - radius * radius
    disc = b * b - 4 * a * c
    ok = disc >= 0
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t1 = (-b - sq) / (2 * a)
    t2 = (-b + sq) / (2 * a)
    t = np.where(t1 > 1e-9, t1, t2)
    return np.where(ok & (t > 1e-9), t, np.inf)


def _ray_cylinder(o, d, radius, halfh):
    a = d[:, 0] ** 2 + d[:, 1] ** 2
    b = 2 * (o[0] * d[:, 0] + o[1] * d[:, 1])
    c = o[0] ** 2 + o[1] ** 2 - radius * radius
    disc = b * b - 4 * a * c
    ok = (disc >= 0) & (a > 1e-18)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-b - sq) / (2 * a)
        t2 = (-b + sq) / (2 * a)
    best = np.full(len(d), np.inf)
    for t in (t1, t2):
        z = o[2] + t * d[:, 2]
        good = ok & (t > 1e-9) & (np.abs(z) <= halfh)
        best = np.where(good & (t < best), t, best)
    # end caps
    with np.errstate(divide="ignore", invalid="ignore"):
        for zcap in (-halfh, halfh):
            t = (zcap - o[2]) / d[:, 2]
            x = o[0] + t * d[:, 0]
            y = o[1] + t * d[:, 1]
            good = (t > 1e-9) & (x * x + y * y <= radius * radius)
            best = np.where(good & (t < best), t, best)
    return best


def render(world: WorldState, with_hits: bool = False):
    """Ray-cast the scene through the pinhole camera.

    Rays pass through integer pixel coordinates, and depth is the camera-z of
    the nearest hit, so ``backproject(u, v, depth[v, u])`` recovers the exact
    surface point.  Returns (RasterImage, DepthMap); with ``with_hits`` also
    the (H*W, 3) world-frame hit points and a hit mask for consistency tests.
    """
    cam = world.camera
    K = cam.intrinsics
    h, w = cam.height, cam.width
    us, vs = np.meshgrid(np.arange(w, dtype=np.float64), np.arange(h, dtype=np.float64))
    d_cam = np.stack(
        [(us - K.cx) / K.fx, (vs - K.cy) / K.fy, np.ones_like(us)], axis=2
    ).reshape(-1, 3)
    R = quat_to_matrix(cam.pose.orientation)
    d_world = d_cam @ R.T
    origin = cam.pose.position

    t_best = np.full(h * w, np.inf)
    color_idx = np.full(h * w, -1, dtype=int)  # -2 plane, k objects

    if world.support_z is not None:
        dz = d_world[:, 2]
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (world.support_z - origin[2]) / dz
        good = np.isfinite(t) & (t > 1e-9)
        upd = good & (t < t_best)
        t_best[upd] = t[upd]
        color_idx[upd] = -2

    for k, obj in enumerate(world.objects):
        Ro = quat_to_matrix(obj.pose.orientation)
        o_loc = Ro.T @ (origin - obj.pose.position)
        d_loc = d_world @ Ro
        if obj.shape == "box":
            t = _ray_box(o_loc, d_loc, obj.size / 2)
        elif obj.shape == "sphere":
            t = _ray_sphere(o_loc, d_loc, obj.size[0] / 2)
        else:
            t = _ray_cylinder(o_loc, d_loc, obj.size[0] / 2, obj.size[2] / 2)
        upd = t < t_best
        t_best[upd] = t[upd]
        color_idx[upd] = k

    img = np.empty((h * w, 3), dtype=np.uint8)
    img[:] = world.background_color
    img[color_idx == -2] = world.plane_color
    for k, obj in enumerate(world.objects):
        img[color_idx == k] = obj.color

    depth = np.where(np.isfinite(t_best), t_best, np.nan).reshape(h, w)
    image = RasterImage(img.reshape(h, w, 3))
    depth_map = DepthMap(depth)
    if not with_hits:
        return image, depth_map
    hits = origin[None, :] + t_best[:, None] * d_world
    return image, depth_map, hits, np.isfinite(t_best)


# ---------------------------------------------------------------------------
# grasping
# ---------------------------------------------------------------------------

def attempt_grasp(world: WorldState, target_world, grasp_radius: float = DEFAULT_GRASP_RADIUS) -> str:
    """Close the gripper at a world point and hold the nearest graspable
    object whose surface is within ``grasp_radius``.

    The gripper ends at the target point; ties under 1e-9 in surface distance
    break by lexicographic object id.  Returns the held object's id.
    """
    if world.gripper.holding:
        raise AlreadyHolding(f"already holding {world.gripper.holding!r}")
    target = np.asarray(target_world, dtype=np.float64)
    world.move_gripper_to(target)
    best = None
    for obj in sorted(world.objects, key=lambda o: o.id):
        if not obj.graspable:
            continue
        dist = obj.surface_distance(target)
        if dist <= grasp_radius and (best is None or dist < best[0] - 1e-9):
            best = (dist, obj)
    if best is None:
        raise NothingToGrasp(
            f"no graspable object surface within {grasp_radius} m of {target.tolist()}"
        )
    obj = best[1]
    world.gripper.holding = obj.id
    world.gripper.hold_rel = world.gripper.pose.inverse().compose(obj.pose)
    return obj.id


def release(world: WorldState) -> None:
    """Open the gripper; the freed object settles straight down onto the
    first support below it (another object's top or the support plane)."""
    if not world.gripper.holding:
        raise NotHolding("gripper is not holding anything")
    obj = world.object_by_id(world.gripper.holding)
    world.gripper.holding = None
    world.gripper.hold_rel = None
    lo, hi = obj.world_aabb()
    support = world.support_z if world.support_z is not None else None
    for other in world.objects:
        if other.id == obj.id:
            continue
        olo, ohi = other.world_aabb()
        overlap = (lo[0] < ohi[0] and hi[0] > olo[0] and lo[1] < ohi[1] and hi[1] > olo[1])
        if overlap and ohi[2] <= lo[2] + 1e-9:
            support = ohi[2] if support is None else max(support, ohi[2])
    if support is not None and lo[2] > support:
        drop = lo[2] - support
        obj.pose = Pose(obj.pose.position - np.array([0, 0, drop]), obj.pose.orientation)


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class TaskSpec:
    """Success criterion for one scripted task."""

    kind: str  # move | rotate | pick | press
    target_object_id: str | None = None
    tolerance_m: float = 0.05
    tolerance_rad: float = 0.15
    step_ordinal: int | None = None  # defaults to the last step

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "target_object_id": self.target_object_id,
            "tolerance_m": self.tolerance_m,
            "tolerance_rad": self.tolerance_rad,
            "step_ordinal": self.step_ordinal,
        }


@dataclass(frozen=True)
class EvalEntry:
    success: bool
    alignment: float
    per_step_alignment: tuple
    details: dict

    def to_json(self) -> dict:
        return {
            "success": self.success,
            "alignment": self.alignment,
            "per_step_alignment": list(self.per_step_alignment),
            "details": self.details,
        }


def evaluate(execution, world: WorldState, spec: TaskSpec) -> EvalEntry:
    """Score one executed plan against its task spec.

    Success checks the end state (object at the lifted endpoint, net rotation
    angle, held object, or reached press point).  Alignment is one minus the
    discrete Frechet distance between each step's executed polyline and its
    lifted instruction polyline, normalized by instruction length.
    """
    runs = list(execution.step_runs)
    target_run = runs[-1]
    if spec.step_ordinal is not None:
        target_run = next(r for r in runs if r.ordinal == spec.step_ordinal)

    details = {}
    if spec.kind == "move":
        obj = world.object_by_id(spec.target_object_id)
        endpoint = target_run.lifted[-1]
        dist = float(np.linalg.norm(obj.pose.position[:2] - endpoint[:2]))
        details["endpoint_distance_m"] = dist
        success = dist <= spec.tolerance_m
    elif spec.kind == "rotate":
        obj = world.object_by_id(spec.target_object_id)
        q0 = execution.initial_poses[spec.target_object_id].orientation
        net = quat_angle(quat_mul(obj.pose.orientation, quat_conjugate(q0)))
        details["net_rotation_rad"] = net
        details["target_rotation_rad"] = target_run.target_angle
        success = abs(net - target_run.target_angle) <= spec.tolerance_rad
    elif spec.kind == "pick":
        details["holding"] = world.gripper.holding
        success = world.gripper.holding == spec.target_object_id
    elif spec.kind == "press":
        center = target_run.lifted[-1]
        dmin = float(np.min(np.linalg.norm(target_run.followed - center[None, :], axis=1)))
        details["closest_approach_m"] = dmin
        success = dmin <= spec.tolerance_m
    else:
        raise ValueError(f"unknown task kind {spec.kind!r}")

    scores = []
    for run in runs:
        if len(run.lifted) >= 2 and len(run.followed) >= 1:
            scores.append(alignment_score(run.followed, run.lifted))
    alignment = float(np.mean(scores)) if scores else (1.0 if success else 0.0)
    return EvalEntry(
        success=bool(success),
        alignment=alignment,
        per_step_alignment=tuple(scores),
        details=details,
    )
