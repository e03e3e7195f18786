"""Keypoint-conditioned low-level control.

The loop is the classic observe / minimize / transition cycle: per tick the
cost of the active keypoint is recorded, the end effector advances one
control step toward it, and when the cost drops to epsilon the index moves
on.  Translation follows straight interpolated segments; rotation sweeps a
circle about the lifted pivot, with target angles taken between consecutive
keypoint vectors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateRadius,
    DepthUnavailable,
    PlanExecutionError,
    SketchPlanError,
    TickBudgetExhausted,
)
from .types import (
    ALPHA_ROTATION,
    ALPHA_TRANSLATION,
    Keypoint2,
    Plan,
    StepPlan,
    quat_angle,
    quat_from_axis_angle,
    quat_mul as _quat_mul,
)

PHASE_STEP = "step"
PHASE_TRANSIT = "transit"
PHASE_APPROACH = "approach"


@dataclass(frozen=True)
class PolicyConfig:
    """Control constants; epsilon is meters for translation branches and
    radians for rotation branches."""

    epsilon_m: float = 0.01
    epsilon_rad: float = 0.02
    step_size: float = 0.01
    max_ticks_per_keypoint: int = 2000

    def __post_init__(self):
        if min(self.epsilon_m, self.epsilon_rad, self.step_size) <= 0:
            raise ValueError("policy constants must be positive")
        if self.max_ticks_per_keypoint < 1:
            raise ValueError("max_ticks_per_keypoint must be >= 1")


@dataclass(frozen=True)
class TickRecord:
    tick: int
    position: tuple
    index: int
    cost: float
    alpha: int
    step: int
    phase: str

    def to_json(self) -> dict:
        return {
            "tick": self.tick,
            "position": list(self.position),
            "index": self.index,
            "cost": self.cost,
            "alpha": self.alpha,
            "step": self.step,
            "phase": self.phase,
        }

    @classmethod
    def from_json(cls, d) -> "TickRecord":
        return cls(
            d["tick"], tuple(d["position"]), d["index"], d["cost"],
            d["alpha"], d["step"], d["phase"],
        )


@dataclass(frozen=True)
class PolicyTrace:
    """Per-tick execution record; ticks strictly increase, the active index
    never decreases within one (step, phase) run."""

    records: tuple

    def __post_init__(self):
        recs = tuple(self.records)
        for a, b in zip(recs, recs[1:]):
            if b.tick <= a.tick:
                raise ValueError("trace ticks must strictly increase")
            if (b.step, b.phase) == (a.step, a.phase) and b.index < a.index:
                raise ValueError("active keypoint index must not decrease")
        object.__setattr__(self, "records", recs)

    def positions(self, step: int | None = None, phase: str | None = None) -> np.ndarray:
        recs = [
            r for r in self.records
            if (step is None or r.step == step) and (phase is None or r.phase == phase)
        ]
        return np.array([r.position for r in recs]) if recs else np.zeros((0, 3))

    def to_ndjson(self) -> str:
        return "\n".join(json.dumps(r.to_json()) for r in self.records) + "\n"

    @classmethod
    def from_ndjson(cls, text: str) -> "PolicyTrace":
        recs = tuple(
            TickRecord.from_json(json.loads(line))
            for line in text.splitlines() if line.strip()
        )
        return cls(recs)


@dataclass(frozen=True)
class Event:
    tick: int
    kind: str  # grasp | release | transit_start | step_start | step_end | press
    step: int
    position: tuple
    info: str | None = None

    def to_json(self) -> dict:
        return {
            "tick": self.tick, "kind": self.kind, "step": self.step,
            "position": list(self.position), "info": self.info,
        }


@dataclass(frozen=True)
class StepRun:
    """Per-step execution artifacts used by evaluation and plotting."""

    ordinal: int
    primitive: str
    lifted: np.ndarray            # instruction keypoints in world frame (N, 3)
    followed: np.ndarray          # executed polyline compared against lifted
    target_angle: float = 0.0     # rotation steps: total angle to sweep
    tick_span: tuple = (0, 0)
    lifted_center: np.ndarray | None = None  # rotation pivot in world frame

    def endpoint(self) -> np.ndarray:
        """Where the end effector is meant to finish this step."""
        if self.primitive == "Rotate":
            return self.lifted_center
        if self.primitive == "PickOrSelect":
            return self.lifted[0]
        return self.lifted[-1]


@dataclass(frozen=True)
class PlanExecution:
    trace: PolicyTrace
    events: tuple
    step_runs: tuple
    initial_poses: dict  # object id -> Pose before execution

    def events_json(self) -> list:
        return [e.to_json() for e in self.events]


# ---------------------------------------------------------------------------
# costs
# ---------------------------------------------------------------------------

def translation_cost(e_position, target) -> float:
    """Euclidean distance between the end-effector position and the target."""
    e = np.asarray(e_position, dtype=np.float64)
    t = np.asarray(target, dtype=np.float64)
    return float(np.linalg.norm(e - t))


def rotation_target_angle(p_i, p_next, c) -> float:
    """Angle swept between consecutive keypoints about the rotation center.

    arccos of the normalized dot product of the two center-relative vectors,
    with the cosine clamped to [-1, 1] against roundoff.
    """
    v1 = np.asarray(p_i, dtype=np.float64) - np.asarray(c, dtype=np.float64)
    v2 = np.asarray(p_next, dtype=np.float64) - np.asarray(c, dtype=np.float64)
    n1, n2 = np.linalg.norm(v1), np.linalg.norm(v2)
    if n1 < 1e-6 or n2 < 1e-6:
        raise DegenerateRadius("rotation keypoint coincides with the center")
    cosine = float(np.dot(v1, v2) / (n1 * n2))
    return math.acos(max(-1.0, min(1.0, cosine)))


def step_cost(alpha: int, delta_trans: float, delta_rot: float) -> float:
    """Blend the two branch costs: alpha selects translation (1) or rotation (0)."""
    return alpha * delta_trans + (1 - alpha) * delta_rot


# ---------------------------------------------------------------------------
# execution engine
# ---------------------------------------------------------------------------

class _Engine:
    """Owns the tick counter and record/event lists for one execution."""

    def __init__(self, world, cfg: PolicyConfig):
        self.world = world
        self.cfg = cfg
        self.records: list = []
        self.events: list = []
        self.tick = 0

    def _record(self, index: int, cost: float, alpha: int, step: int, phase: str):
        self.records.append(
            TickRecord(
                tick=self.tick,
                position=tuple(self.world.gripper.pose.position.tolist()),
                index=index,
                cost=cost,
                alpha=alpha,
                step=step,
                phase=phase,
            )
        )
        self.tick += 1
        self.world.tick = self.tick

    def event(self, kind: str, step: int, info: str | None = None):
        self.events.append(
            Event(
                tick=self.tick,
                kind=kind,
                step=step,
                position=tuple(self.world.gripper.pose.position.tolist()),
                info=info,
            )
        )

    def translate(self, targets, step: int, phase: str, index_base: int = 0) -> None:
        """Drive the gripper through targets on straight segments."""
        cfg = self.cfg
        for i, target in enumerate(targets):
            target = np.asarray(target, dtype=np.float64)
            spent = 0
            while True:
                pos = self.world.gripper.pose.position
                cost = translation_cost(pos, target)
                self._record(index_base + i, cost, ALPHA_TRANSLATION, step, phase)
                if cost <= cfg.epsilon_m:
                    break
                if spent >= cfg.max_ticks_per_keypoint:
                    raise TickBudgetExhausted(
                        f"step {step}: {cfg.max_ticks_per_keypoint} ticks spent "
                        f"without reaching keypoint {index_base + i}"
                    )
                move = min(cfg.step_size, cost)
                self.world.move_gripper_to(pos + (target - pos) / cost * move)
                spent += 1

    def rotate(self, keypoints, center, step: int, index_base: int = 0) -> tuple:
        """Sweep the gripper about ``center`` through the keypoint directions.

        The end effector keeps its own radius (distance to the center at
        entry, possibly zero for an in-place pivot) while the keypoints set
        the per-segment target angles and the rotation plane.  Returns the
        net target rotation angle (composed across segments, since each
        segment may spin about a slightly different axis) and the rim
        polyline traced at the keypoint radius, for alignment scoring.
        """
        cfg = self.cfg
        center = np.asarray(center, dtype=np.float64)
        kps = [np.asarray(k, dtype=np.float64) for k in keypoints]
        ee_radius = float(np.linalg.norm(self.world.gripper.pose.position - center))
        rim = [kps[0].copy()]
        q_target = np.array([1.0, 0.0, 0.0, 0.0])
        for i in range(len(kps) - 1):
            v1 = kps[i] - center
            v2 = kps[i + 1] - center
            theta_target = rotation_target_angle(kps[i], kps[i + 1], center)
            r1 = np.linalg.norm(v1)
            u1 = v1 / r1
            w = v2 - np.dot(v2, u1) * u1
            wn = np.linalg.norm(w)
            if wn > 1e-9:
                u2 = w / wn
            else:
                # parallel vectors: pick a deterministic perpendicular
                for basis in (np.array([1.0, 0, 0]), np.array([0, 1.0, 0]), np.array([0, 0, 1.0])):
                    w = basis - np.dot(basis, u1) * u1
                    wn = np.linalg.norm(w)
                    if wn > 1e-9:
                        u2 = w / wn
                        break
            normal = np.cross(u1, u2)
            q_target = _quat_mul(quat_from_axis_angle(normal, theta_target), q_target)

            # place the end effector on its own circle at its current angle
            rel = self.world.gripper.pose.position - center
            theta_t = math.atan2(float(np.dot(rel, u2)), float(np.dot(rel, u1)))
            if ee_radius > 1e-9:
                self.world.move_gripper_to(
                    center + ee_radius * (math.cos(theta_t) * u1 + math.sin(theta_t) * u2)
                )
            ang_step = cfg.step_size / r1
            spent = 0
            while True:
                delta = abs(theta_t - theta_target)
                self._record(index_base + i, delta, ALPHA_ROTATION, step, PHASE_STEP)
                rim.append(center + r1 * (math.cos(theta_t) * u1 + math.sin(theta_t) * u2))
                if delta <= cfg.epsilon_rad:
                    break
                if spent >= cfg.max_ticks_per_keypoint:
                    raise TickBudgetExhausted(
                        f"step {step}: rotation segment {i} exceeded the tick budget"
                    )
                adv = min(ang_step, delta) * (1.0 if theta_target >= theta_t else -1.0)
                q = quat_from_axis_angle(normal, adv)
                self.world.rotate_gripper(q, center)
                theta_t += adv
                spent += 1
        return quat_angle(q_target), np.array(rim)


def execute_step(step: StepPlan, keypoints3, world, cfg: PolicyConfig = PolicyConfig(),
                 center3=None) -> PolicyTrace:
    """Run one step's keypoint-following loop against the world's gripper.

    ``keypoints3`` are world-frame target points; rotation steps also need
    the lifted center.  The world is mutated (gripper pose, held object);
    the returned trace is immutable.
    """
    engine = _Engine(world, cfg)
    if step.action_type == ALPHA_TRANSLATION:
        engine.translate(keypoints3, step.ordinal, PHASE_STEP)
    else:
        if center3 is None:
            raise ValueError("rotation step needs the lifted center")
        engine.rotate(keypoints3, center3, step.ordinal)
    return PolicyTrace(tuple(engine.records))


def execute_plan(plan: Plan, world, cfg: PolicyConfig = PolicyConfig(),
                 grasp_radius: float | None = None) -> PlanExecution:
    """Execute every step of a plan in ordinal order.

    Lifts all keypoints up front from the initial observation, then drives
    the action descriptors: transit moves, approach-and-grasp, keypoint
    following, rotation pivots, releases.  Errors carry the ordinal of the
    failing step.
    """
    from . import sim
    from .camera import backproject

    if grasp_radius is None:
        grasp_radius = sim.DEFAULT_GRASP_RADIUS

    _, depth = sim.render(world)
    cam = world.camera
    initial_poses = {o.id: o.pose for o in world.objects}

    def lift(kp: Keypoint2) -> np.ndarray:
        p_cam = backproject(kp, depth, cam.intrinsics)
        return cam.to_world(p_cam.xyz())

    # lift everything first so failures surface before any motion
    lifted_steps = []
    for step in plan.steps:
        try:
            pts = np.array([lift(k) for k in step.keypoints2d])
            center = lift(step.rotation_center2d) if step.rotation_center2d else None
        except DepthUnavailable as err:
            raise PlanExecutionError(step.ordinal, err)
        lifted_steps.append((pts, center))

    engine = _Engine(world, cfg)
    runs = []
    up = cam.up_direction()

    for idx, step in enumerate(plan.steps):
        pts, center = lifted_steps[idx]
        engine.event("step_start", step.ordinal)
        followed = None
        target_angle = 0.0
        tick_start = engine.tick
        # one running keypoint index per step keeps traces monotone even when
        # an externally authored plan repeats action kinds within a step
        kp_base = {PHASE_STEP: 0, PHASE_APPROACH: 0, PHASE_TRANSIT: 0}

        def run_translate(targets, phase):
            engine.translate(targets, step.ordinal, phase, index_base=kp_base[phase])
            kp_base[phase] += len(targets)

        try:
            for act in plan.actions[idx]:
                if act.transit:
                    engine.event("transit_start", step.ordinal)
                    run_translate([lift(act.keypoints[0])], PHASE_TRANSIT)
                elif act.name == "grasp":
                    target = lift(act.keypoints[0])
                    if world.gripper.holding:
                        sim.release(world)
                        engine.event("release", step.ordinal, info="implicit before regrasp")
                    run_translate([target + sim.APPROACH_OFFSET * up, target],
                                  PHASE_APPROACH)
                    held = sim.attempt_grasp(world, target, grasp_radius)
                    engine.event("grasp", step.ordinal, info=held)
                elif act.name == "move_to":
                    run_translate([lift(k) for k in act.keypoints], PHASE_STEP)
                    followed = _positions_since(engine, tick_start)
                elif act.name == "rotate_about":
                    rot_center = lift(act.keypoints[0])
                    rot_kps = [lift(k) for k in act.keypoints[1:]]
                    target_angle, rim = engine.rotate(
                        rot_kps, rot_center, step.ordinal,
                        index_base=kp_base[PHASE_STEP],
                    )
                    kp_base[PHASE_STEP] += max(0, len(rot_kps) - 1)
                    followed = rim
                elif act.name == "release":
                    sim.release(world)
                    engine.event("release", step.ordinal)
                elif act.name == "press":
                    run_translate([lift(act.keypoints[0])], PHASE_STEP)
                    engine.event("press", step.ordinal)
        except SketchPlanError as err:
            if isinstance(err, PlanExecutionError):
                raise
            raise PlanExecutionError(step.ordinal, err)
        engine.event("step_end", step.ordinal)

        if followed is None:
            followed = _positions_since(engine, tick_start)
        runs.append(
            StepRun(
                ordinal=step.ordinal,
                primitive=step.primitive,
                lifted=pts,
                followed=followed,
                target_angle=target_angle,
                tick_span=(tick_start, engine.tick),
                lifted_center=center,
            )
        )

    return PlanExecution(
        trace=PolicyTrace(tuple(engine.records)),
        events=tuple(engine.events),
        step_runs=tuple(runs),
        initial_poses=initial_poses,
    )


def _positions_since(engine: _Engine, tick_start: int) -> np.ndarray:
    recs = [r for r in engine.records if r.tick >= tick_start and r.phase == PHASE_STEP]
    if not recs:
        recs = [r for r in engine.records if r.tick >= tick_start]
    return np.array([r.position for r in recs]) if recs else np.zeros((0, 3))
