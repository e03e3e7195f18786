"""Golden scenes: one scripted task per supported manipulation skill.

Each case bundles a scene, a sketch script whose pixel coordinates are
derived from the scene geometry at load time (projecting object anchors
through the scene camera), and the task spec that scores the run.
"""

from __future__ import annotations

import json
import math
from importlib import resources

import numpy as np

from .camera import project
from .sim import TaskSpec, WorldState, world_from_json
from .strokes import SketchScript, SymbolDirective
from .types import DEFAULT_PALETTE, Keypoint3, STYLE_GEOMETRIC

SKILLS = (
    "move_object",
    "rotate_object",
    "pick_object",
    "open_drawer",
    "close_drawer",
)


def golden_world(skill: str) -> WorldState:
    if skill not in SKILLS:
        raise KeyError(f"unknown golden skill {skill!r}; choose from {SKILLS}")
    text = resources.files("sketchplan").joinpath(f"data/scenes/{skill}.json").read_text()
    return world_from_json(json.loads(text), palette=DEFAULT_PALETTE)


def pixel_of(world: WorldState, p_world) -> tuple:
    """Project a world point through the scene camera to (u, v) pixels."""
    p_cam = world.camera.to_camera(np.asarray(p_world, dtype=np.float64))
    kp = project(Keypoint3(p_cam[0], p_cam[1], p_cam[2], "waypoint"), world.camera.intrinsics)
    return (kp.u, kp.v)


def _top_center(world: WorldState, object_id: str) -> np.ndarray:
    obj = world.object_by_id(object_id)
    lo, hi = obj.world_aabb()
    return np.array([obj.pose.position[0], obj.pose.position[1], hi[2]])


def golden_case(skill: str, style: str = STYLE_GEOMETRIC, width: float = 5.0,
                seed: int = 0, jitter: float = 0.0):
    """Returns (world, sketch script, task spec) for one golden skill."""
    world = golden_world(skill)
    common = dict(style=style, width=width, jitter=jitter, seed=seed)

    if skill == "move_object":
        start = pixel_of(world, _top_center(world, "cube"))
        end = pixel_of(world, np.array([0.10, -0.04, 0.0]))
        script = SketchScript((SymbolDirective("arrow", 1, (start, end), **common),))
        spec = TaskSpec(kind="move", target_object_id="cube")

    elif skill == "rotate_object":
        center_w = _top_center(world, "bar")
        cpix = pixel_of(world, center_w)
        r = 0.06  # arc radius; keeps the arrowhead clear of the drawn circle
        arc = [
            pixel_of(world, center_w + np.array([r * math.cos(a), r * math.sin(a), 0.0]))
            for a in (0.0, math.pi / 4, math.pi / 2)
        ]
        script = SketchScript(
            (
                SymbolDirective("circle", 1, (cpix,), radius=14.0, **common),
                SymbolDirective("arrow", 1, tuple(arc), **common),
            )
        )
        spec = TaskSpec(kind="rotate", target_object_id="bar")

    elif skill == "pick_object":
        cpix = pixel_of(world, _top_center(world, "ball"))
        script = SketchScript((SymbolDirective("circle", 1, (cpix,), radius=18.0, **common),))
        spec = TaskSpec(kind="pick", target_object_id="ball")

    elif skill == "open_drawer":
        drawer = world.object_by_id("drawer")
        front = drawer.pose.position + np.array([0.0, -0.025, 0.0])
        start = pixel_of(world, np.array([front[0], front[1], drawer.world_aabb()[1][2]]))
        end = pixel_of(world, np.array([front[0], -0.06, 0.0]))
        script = SketchScript((SymbolDirective("arrow", 1, (start, end), **common),))
        spec = TaskSpec(kind="move", target_object_id="drawer")

    else:  # close_drawer
        drawer = world.object_by_id("drawer")
        front = drawer.pose.position + np.array([0.0, -0.025, 0.0])
        start = pixel_of(world, np.array([front[0], front[1], drawer.world_aabb()[1][2]]))
        end = pixel_of(world, np.array([front[0], 0.115, 0.0]))
        script = SketchScript((SymbolDirective("arrow", 1, (start, end), **common),))
        spec = TaskSpec(kind="move", target_object_id="drawer")

    return world, script, spec
