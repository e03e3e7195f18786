"""Shared domain vocabulary: images, colors, symbols, keypoints, poses, plans.

Conventions used everywhere in the package:

* image origin is the top-left corner, ``u`` grows rightward (columns) and
  ``v`` grows downward (rows); pixel buffers are row-major numpy arrays
  indexed ``[v, u]``
* quaternions are ``(w, x, y, z)`` and kept unit-norm
* all types here are immutable value objects and safe to share across threads
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ColorsTooClose, DuplicateOrdinal, NonContiguousOrdinals

ROLE_START = "start"
ROLE_WAYPOINT = "waypoint"
ROLE_END = "end"
ROLE_CENTER = "center"
ROLES = (ROLE_START, ROLE_WAYPOINT, ROLE_END, ROLE_CENTER)

PRIMITIVE_MOVE = "MoveAToB"
PRIMITIVE_ROTATE = "Rotate"
PRIMITIVE_PICK = "PickOrSelect"
PRIMITIVES = (PRIMITIVE_MOVE, PRIMITIVE_ROTATE, PRIMITIVE_PICK)

# Closed set of executable action names; plans never carry free-form code.
ACTION_NAMES = ("grasp", "move_to", "rotate_about", "release", "press")


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


# ---------------------------------------------------------------------------
# images
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RasterImage:
    """8-bit RGB image, shape ``(height, width, 3)``."""

    pixels: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (H, W, 3) pixel buffer, got {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        object.__setattr__(self, "pixels", _frozen_array(arr, np.uint8))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @classmethod
    def full(cls, width: int, height: int, color=(0, 0, 0)) -> "RasterImage":
        buf = np.empty((height, width, 3), np.uint8)
        buf[:] = color
        return cls(buf)

    @classmethod
    def from_file(cls, path) -> "RasterImage":
        from PIL import Image

        with Image.open(path) as im:
            return cls(np.asarray(im.convert("RGB")))

    def to_file(self, path) -> None:
        from PIL import Image

        Image.fromarray(np.asarray(self.pixels)).save(path, format="PNG")

    def same_pixels(self, other: "RasterImage") -> bool:
        return self.pixels.shape == other.pixels.shape and bool(
            np.array_equal(self.pixels, other.pixels)
        )


@dataclass(frozen=True, eq=False)
class DepthMap:
    """Per-pixel depth in meters; holes are NaN, finite values are > 0."""

    depths: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.depths, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError(f"expected (H, W) depth buffer, got {arr.shape}")
        finite = arr[np.isfinite(arr)]
        if finite.size and finite.min() <= 0:
            raise ValueError("finite depths must be positive; use NaN for holes")
        object.__setattr__(self, "depths", _frozen_array(arr, np.float64))

    @property
    def width(self) -> int:
        return self.depths.shape[1]

    @property
    def height(self) -> int:
        return self.depths.shape[0]

    def matches(self, image: RasterImage) -> bool:
        return (self.height, self.width) == (image.height, image.width)

    @classmethod
    def from_npy(cls, path) -> "DepthMap":
        return cls(np.load(path))

    def to_npy(self, path) -> None:
        np.save(path, np.asarray(self.depths))


# ---------------------------------------------------------------------------
# colors and palette
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepColor:
    """A palette entry: RGB value plus the 1-based temporal step it encodes."""

    rgb: tuple
    ordinal: int

    def __post_init__(self):
        rgb = tuple(int(c) for c in self.rgb)
        if len(rgb) != 3 or any(c < 0 or c > 255 for c in rgb):
            raise ValueError(f"bad rgb triple {self.rgb!r}")
        if self.ordinal < 1:
            raise ValueError("step ordinal must be >= 1")
        object.__setattr__(self, "rgb", rgb)

    def distance(self, rgb) -> float:
        return math.dist(self.rgb, tuple(rgb))


GREEN = (0, 255, 94)
BLUE = (0, 255, 247)
PINK = (255, 106, 138)

DEFAULT_PALETTE = (
    StepColor(GREEN, 1),
    StepColor(BLUE, 2),
    StepColor(PINK, 3),
)

# Steps beyond three have no canonical colors; these two extras keep every
# pairwise distance above the default segmentation tolerance.
EXTENDED_PALETTE = DEFAULT_PALETTE + (
    StepColor((255, 214, 0), 4),
    StepColor((170, 0, 255), 5),
)


def validate_palette(palette, tolerance: float = 100.0) -> None:
    """Check ordinal contiguity and pairwise color separability.

    Raises DuplicateOrdinal, NonContiguousOrdinals or ColorsTooClose.
    """
    colors = list(palette)
    if not colors:
        raise ValueError("palette must not be empty")
    ordinals = sorted(c.ordinal for c in colors)
    if len(set(ordinals)) != len(ordinals):
        raise DuplicateOrdinal(f"duplicate step ordinals in palette: {ordinals}")
    if ordinals != list(range(1, len(ordinals) + 1)):
        raise NonContiguousOrdinals(f"step ordinals must be 1..K, got {ordinals}")
    for i, a in enumerate(colors):
        for b in colors[i + 1:]:
            d = a.distance(b.rgb)
            if d <= tolerance:
                raise ColorsTooClose(
                    f"palette colors {a.rgb} and {b.rgb} are {d:.1f} apart, "
                    f"below tolerance {tolerance}"
                )


def palette_from_json(entries) -> tuple:
    return tuple(StepColor(tuple(e["rgb"]), int(e["ordinal"])) for e in entries)


def palette_to_json(palette) -> list:
    return [{"rgb": list(c.rgb), "ordinal": c.ordinal} for c in palette]


# ---------------------------------------------------------------------------
# keypoints and symbols
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Keypoint2:
    """2D pixel keypoint with a semantic role."""

    u: float
    v: float
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown keypoint role {self.role!r}")
        object.__setattr__(self, "u", float(self.u))
        object.__setattr__(self, "v", float(self.v))

    def xy(self) -> np.ndarray:
        return np.array([self.u, self.v])

    def to_json(self) -> dict:
        return {"u": self.u, "v": self.v, "role": self.role}

    @classmethod
    def from_json(cls, d) -> "Keypoint2":
        return cls(d["u"], d["v"], d["role"])


@dataclass(frozen=True)
class Keypoint3:
    """Camera-frame 3D keypoint in meters; z > 0 (in front of the camera)."""

    x: float
    y: float
    z: float
    role: str

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown keypoint role {self.role!r}")
        if not self.z > 0:
            raise ValueError(f"camera-frame keypoint must have z > 0, got {self.z}")
        for name in ("x", "y", "z"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def xyz(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def to_json(self) -> dict:
        return {"x": self.x, "y": self.y, "z": self.z, "role": self.role}

    @classmethod
    def from_json(cls, d) -> "Keypoint3":
        return cls(d["x"], d["y"], d["z"], d["role"])


STYLE_LOOSE = "loose"
STYLE_GEOMETRIC = "geometric"
STYLES = (STYLE_LOOSE, STYLE_GEOMETRIC)


@dataclass(frozen=True)
class ArrowSymbol:
    """Ordered trajectory symbol: tail start, shaft waypoints, head end."""

    color: StepColor
    keypoints: tuple
    style: str = STYLE_GEOMETRIC

    def __post_init__(self):
        kps = tuple(self.keypoints)
        if len(kps) < 2:
            raise ValueError("arrow needs at least tail and head keypoints")
        if kps[0].role != ROLE_START or kps[-1].role != ROLE_END:
            raise ValueError("arrow keypoints must run start..end")
        if any(k.role != ROLE_WAYPOINT for k in kps[1:-1]):
            raise ValueError("interior arrow keypoints must be waypoints")
        for a, b in zip(kps, kps[1:]):
            if a.u == b.u and a.v == b.v:
                raise ValueError("consecutive arrow keypoints must be distinct")
        if self.style not in STYLES:
            raise ValueError(f"unknown style {self.style!r}")
        object.__setattr__(self, "keypoints", kps)

    @property
    def start(self) -> Keypoint2:
        return self.keypoints[0]

    @property
    def end(self) -> Keypoint2:
        return self.keypoints[-1]

    def to_json(self) -> dict:
        return {
            "kind": "arrow",
            "color": {"rgb": list(self.color.rgb), "ordinal": self.color.ordinal},
            "style": self.style,
            "keypoints": [k.to_json() for k in self.keypoints],
        }


@dataclass(frozen=True)
class CircleSymbol:
    """Affordance marker: a center keypoint plus the drawn radius."""

    color: StepColor
    center: Keypoint2
    radius: float

    def __post_init__(self):
        if self.center.role != ROLE_CENTER:
            raise ValueError("circle center keypoint must have role 'center'")
        if not self.radius > 0:
            raise ValueError("circle radius must be positive")
        object.__setattr__(self, "radius", float(self.radius))

    def to_json(self) -> dict:
        return {
            "kind": "circle",
            "color": {"rgb": list(self.color.rgb), "ordinal": self.color.ordinal},
            "center": self.center.to_json(),
            "radius": self.radius,
        }


def symbol_from_json(d) -> "ArrowSymbol | CircleSymbol":
    color = StepColor(tuple(d["color"]["rgb"]), int(d["color"]["ordinal"]))
    if d["kind"] == "arrow":
        kps = tuple(Keypoint2.from_json(k) for k in d["keypoints"])
        return ArrowSymbol(color, kps, d.get("style", STYLE_GEOMETRIC))
    if d["kind"] == "circle":
        return CircleSymbol(color, Keypoint2.from_json(d["center"]), d["radius"])
    raise ValueError(f"unknown symbol kind {d.get('kind')!r}")


@dataclass(frozen=True)
class UnknownComponent:
    """Diagnostic record for a stroke the parser could not interpret."""

    ordinal: int
    pixel_count: int
    bbox: tuple  # (u0, v0, u1, v1) inclusive
    reason: str

    def to_json(self) -> dict:
        return {
            "ordinal": self.ordinal,
            "pixel_count": self.pixel_count,
            "bbox": list(self.bbox),
            "reason": self.reason,
        }


@dataclass(frozen=True)
class SymbolSet:
    """All symbols extracted from one sketch, grouped by step color."""

    symbols: tuple
    unknown: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "unknown", tuple(self.unknown))

    def by_ordinal(self) -> dict:
        groups: dict = {}
        for s in self.symbols:
            groups.setdefault(s.color.ordinal, []).append(s)
        return dict(sorted(groups.items()))

    def ordinals(self) -> list:
        return sorted({s.color.ordinal for s in self.symbols})

    def to_json(self) -> dict:
        return {
            "symbols": [s.to_json() for s in self.symbols],
            "unknown_components": [u.to_json() for u in self.unknown],
        }

    @classmethod
    def from_json(cls, d) -> "SymbolSet":
        symbols = tuple(symbol_from_json(s) for s in d["symbols"])
        unknown = tuple(
            UnknownComponent(u["ordinal"], u["pixel_count"], tuple(u["bbox"]), u["reason"])
            for u in d.get("unknown_components", ())
        )
        return cls(symbols, unknown)


# ---------------------------------------------------------------------------
# quaternions and poses
# ---------------------------------------------------------------------------

def quat_mul(q1, q2) -> np.ndarray:
    w1, x1, y1, z1 = q1
    w2, x2, y2, z2 = q2
    return np.array(
        [
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_rotate(q, v) -> np.ndarray:
    """Rotate vector(s) ``v`` by unit quaternion ``q``; v may be (3,) or (N, 3)."""
    q = np.asarray(q, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    w, xyz = q[0], q[1:]
    t = 2.0 * np.cross(xyz, v)
    return v + w * t + np.cross(xyz, t)


def quat_from_axis_angle(axis, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    n = np.linalg.norm(axis)
    if n == 0:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * angle
    return np.concatenate([[math.cos(half)], math.sin(half) / n * axis])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_angle(q) -> float:
    """Magnitude of the rotation encoded by ``q``, in [0, pi]."""
    w = min(1.0, max(-1.0, abs(float(q[0]))))
    return 2.0 * math.acos(w)


@dataclass(frozen=True, eq=False)
class Pose:
    """Rigid transform: position in meters plus unit quaternion orientation."""

    position: np.ndarray
    orientation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0, 0, 0]))

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        ori = np.asarray(self.orientation, dtype=np.float64)
        if pos.shape != (3,) or ori.shape != (4,):
            raise ValueError("pose needs a 3-vector position and 4-vector quaternion")
        n = np.linalg.norm(ori)
        if not np.isfinite(n) or n < 1e-12:
            raise ValueError("orientation quaternion must be nonzero")
        object.__setattr__(self, "position", _frozen_array(pos, np.float64))
        object.__setattr__(self, "orientation", _frozen_array(ori / n, np.float64))

    @classmethod
    def identity(cls) -> "Pose":
        return cls(np.zeros(3))

    def transform_point(self, p) -> np.ndarray:
        return quat_rotate(self.orientation, p) + self.position

    def inverse_transform_point(self, p) -> np.ndarray:
        return quat_rotate(quat_conjugate(self.orientation), np.asarray(p) - self.position)

    def compose(self, other: "Pose") -> "Pose":
        """self applied after other: (self * other).transform = self(other(p))."""
        return Pose(
            self.transform_point(other.position),
            quat_mul(self.orientation, other.orientation),
        )

    def inverse(self) -> "Pose":
        qc = quat_conjugate(self.orientation)
        return Pose(quat_rotate(qc, -self.position), qc)

    def almost_equal(self, other: "Pose", tol: float = 1e-9) -> bool:
        if np.max(np.abs(self.position - other.position)) > tol:
            return False
        # q and -q encode the same rotation
        d = min(
            np.max(np.abs(self.orientation - other.orientation)),
            np.max(np.abs(self.orientation + other.orientation)),
        )
        return bool(d <= tol)

    def to_json(self) -> dict:
        return {"position": self.position.tolist(), "quaternion": self.orientation.tolist()}

    @classmethod
    def from_json(cls, d) -> "Pose":
        return cls(np.array(d["position"]), np.array(d["quaternion"]))


# ---------------------------------------------------------------------------
# plans
# ---------------------------------------------------------------------------

ALPHA_TRANSLATION = 1
ALPHA_ROTATION = 0


@dataclass(frozen=True)
class ActionDescriptor:
    """One executable action: a closed-enum name plus pixel keypoint arguments."""

    name: str
    keypoints: tuple = ()
    transit: bool = False

    def __post_init__(self):
        if self.name not in ACTION_NAMES:
            raise ValueError(f"action name must be one of {ACTION_NAMES}, got {self.name!r}")
        object.__setattr__(self, "keypoints", tuple(self.keypoints))

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "keypoints": [k.to_json() for k in self.keypoints],
            "transit": self.transit,
        }

    @classmethod
    def from_json(cls, d) -> "ActionDescriptor":
        return cls(
            d["name"],
            tuple(Keypoint2.from_json(k) for k in d.get("keypoints", ())),
            bool(d.get("transit", False)),
        )


@dataclass(frozen=True)
class StepPlan:
    """One temporal step: primitive, consumed symbols, keypoint arguments."""

    ordinal: int
    primitive: str
    symbols: tuple
    action_type: int
    keypoints2d: tuple
    rotation_center2d: Keypoint2 | None = None

    def __post_init__(self):
        object.__setattr__(self, "symbols", tuple(self.symbols))
        object.__setattr__(self, "keypoints2d", tuple(self.keypoints2d))
        if self.primitive not in PRIMITIVES:
            raise ValueError(f"unknown primitive {self.primitive!r}")
        arrows = [s for s in self.symbols if isinstance(s, ArrowSymbol)]
        circles = [s for s in self.symbols if isinstance(s, CircleSymbol)]
        if self.primitive == PRIMITIVE_MOVE:
            if len(arrows) != 1 or circles or self.action_type != ALPHA_TRANSLATION:
                raise ValueError("MoveAToB needs exactly one arrow and action_type 1")
        elif self.primitive == PRIMITIVE_ROTATE:
            if len(arrows) != 1 or len(circles) != 1 or self.action_type != ALPHA_ROTATION:
                raise ValueError("Rotate needs one circle, one arrow and action_type 0")
            if self.rotation_center2d != circles[0].center:
                raise ValueError("Rotate rotation_center2d must equal the circle center")
        elif self.primitive == PRIMITIVE_PICK:
            if len(circles) != 1 or arrows or len(self.keypoints2d) != 1:
                raise ValueError("PickOrSelect needs exactly one circle and one grasp keypoint")

    def to_json(self) -> dict:
        return {
            "ordinal": self.ordinal,
            "primitive": self.primitive,
            "symbols": [s.to_json() for s in self.symbols],
            "action_type": self.action_type,
            "keypoints2d": [k.to_json() for k in self.keypoints2d],
            "rotation_center2d": (
                self.rotation_center2d.to_json() if self.rotation_center2d else None
            ),
        }

    @classmethod
    def from_json(cls, d) -> "StepPlan":
        center = d.get("rotation_center2d")
        return cls(
            int(d["ordinal"]),
            d["primitive"],
            tuple(symbol_from_json(s) for s in d["symbols"]),
            int(d["action_type"]),
            tuple(Keypoint2.from_json(k) for k in d["keypoints2d"]),
            Keypoint2.from_json(center) if center else None,
        )


@dataclass(frozen=True)
class Plan:
    """Hierarchical plan: task label, ordered steps, narration, actions."""

    task_label: str
    steps: tuple
    narration: tuple
    actions: tuple  # one tuple of ActionDescriptor per step

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        object.__setattr__(self, "narration", tuple(self.narration))
        object.__setattr__(self, "actions", tuple(tuple(a) for a in self.actions))
        ordinals = [s.ordinal for s in self.steps]
        if ordinals != list(range(1, len(ordinals) + 1)):
            raise ValueError(f"plan steps must be ordinals 1..K in order, got {ordinals}")
        if len(self.narration) != len(self.steps) or len(self.actions) != len(self.steps):
            raise ValueError("narration and actions need one entry per step")

    def to_json_dict(self) -> dict:
        return {
            "task_label": self.task_label,
            "steps": [s.to_json() for s in self.steps],
            "narration": list(self.narration),
            "actions": [[a.to_json() for a in acts] for acts in self.actions],
        }

    def to_json(self, indent=None) -> str:
        return json.dumps(self.to_json_dict(), indent=indent)

    @classmethod
    def from_json_dict(cls, d) -> "Plan":
        return cls(
            d["task_label"],
            tuple(StepPlan.from_json(s) for s in d["steps"]),
            tuple(d["narration"]),
            tuple(tuple(ActionDescriptor.from_json(a) for a in acts) for acts in d["actions"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Plan":
        return cls.from_json_dict(json.loads(text))
