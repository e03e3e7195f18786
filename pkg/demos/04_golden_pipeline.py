"""
The whole pipeline on the five golden skills
============================================

Sketch -> symbols -> plan -> lifted keypoints -> simulated execution ->
evaluation, one row per skill, plus a trajectory plot for the move task.
"""

import os

import numpy as np

from sketchplan import sim
from sketchplan.camera import project_points
from sketchplan.golden import SKILLS, golden_case
from sketchplan.parse import parse_sketch
from sketchplan.planning import build_plan
from sketchplan.plotting import trajectory_svg
from sketchplan.policy import PolicyConfig, execute_plan
from sketchplan.strokes import render_sketch

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

print(f"{'skill':14s} {'plan':18s} {'success':8s} {'alignment':9s} ticks")
for skill in SKILLS:
    world, script, spec = golden_case(skill)
    clean, _ = sim.render(world)
    annotated, _ = render_sketch(clean, script)
    plan = build_plan(parse_sketch(annotated, clean=clean))
    execution = execute_plan(plan, world, PolicyConfig())
    entry = sim.evaluate(execution, world, spec)
    print(f"{skill:14s} {plan.task_label:18s} {str(entry.success):8s} "
          f"{entry.alignment:9.3f} {len(execution.trace.records)}")

    if skill == "move_object":
        cam = world.camera
        instructed = [np.array([[k.u, k.v] for k in s.keypoints2d]) for s in plan.steps]
        executed = []
        for run in execution.step_runs:
            p_cam = np.array([cam.to_camera(p) for p in run.followed])
            executed.append(project_points(p_cam, cam.intrinsics))
        svg = trajectory_svg(cam.width, cam.height, instructed, executed)
        path = os.path.join(out_dir, "trajectory.svg")
        with open(path, "w") as f:
            f.write(svg)
        print(f"  -> {path}")
