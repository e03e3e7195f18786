"""
From pixels to motion: back-projection and the keypoint policy
==============================================================

Lift 2D keypoints into camera-frame 3D with the depth map, then drive the
end effector through them and watch the cost fall tick by tick.
"""

import numpy as np

from sketchplan import sim
from sketchplan.camera import Intrinsics, backproject, project
from sketchplan.golden import golden_world
from sketchplan.policy import PolicyConfig, execute_step
from sketchplan.sim import CameraModel, GripperState, WorldState
from sketchplan.types import (
    ArrowSymbol,
    DEFAULT_PALETTE,
    Keypoint2,
    Pose,
    StepPlan,
)

world = golden_world("move_object")
image, depth = sim.render(world)

# Lift two pixels: one over the cube, one over free table; projecting the
# 3D point back lands on the same pixel.
cube_px = Keypoint2(102, 108, "start")
table_px = Keypoint2(240, 170, "end")
for kp in (cube_px, table_px):
    p = backproject(kp, depth, world.camera.intrinsics)
    back = project(p, world.camera.intrinsics)
    print(f"pixel ({kp.u:.0f},{kp.v:.0f}) -> camera ({p.x:+.3f},{p.y:+.3f},{p.z:.3f}) m"
          f" -> back to ({back.u:.1f},{back.v:.1f})")

# A bare world for the control loop; the camera is only along for the ride.
loop_world = WorldState(
    objects=[],
    gripper=GripperState(pose=Pose(np.zeros(3))),
    camera=world.camera,
    support_z=None,
)
kps = (Keypoint2(10, 10, "start"), Keypoint2(60, 10, "end"))
step = StepPlan(1, "MoveAToB", (ArrowSymbol(DEFAULT_PALETTE[0], kps),), 1, kps)
targets = [np.array([0.05, 0.00, 0.0]), np.array([0.05, 0.05, 0.0])]

trace = execute_step(step, targets, loop_world, PolicyConfig())
print(f"\n{len(trace.records)} ticks to pass {len(targets)} keypoints:")
for rec in trace.records[::3]:
    print(f"  tick {rec.tick:3d}  target #{rec.index}  cost {rec.cost:.3f} m")
print(f"final cost {trace.records[-1].cost:.4f} m "
      f"(epsilon is {PolicyConfig().epsilon_m} m)")
