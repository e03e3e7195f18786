"""Turn a SymbolSet into an executable Plan.

The geometric planner is deterministic and total on the supported grammar
(per color: arrow, circle, or circle+arrow).  An external HTTP backend can
stand in for it; its response must satisfy the Plan schema and invariants or
it is rejected outright, never silently replaced by the geometric result.
"""

from __future__ import annotations

import base64
import io
from dataclasses import dataclass

import requests

from .errors import (
    EmptySymbolSet,
    MissingStepColor,
    PlannerTimeout,
    PlannerUnreachable,
    SchemaViolation,
    UnsupportedSymbolCombination,
)
from .types import (
    ALPHA_ROTATION,
    ALPHA_TRANSLATION,
    PRIMITIVE_MOVE,
    PRIMITIVE_PICK,
    PRIMITIVE_ROTATE,
    ActionDescriptor,
    ArrowSymbol,
    CircleSymbol,
    Plan,
    RasterImage,
    StepPlan,
    SymbolSet,
)

DEFAULT_PROMPT = (
    "The image shows a scene with colored arrows and circles drawn on it. "
    "Interpret them as a manipulation task: colors order the steps, an arrow "
    "moves an object along its path, a circle marks a grasp or pivot point, "
    "a circle plus arrow rotates about the circle center. Respond with a JSON "
    "plan: task_label, steps, narration, actions."
)


@dataclass(frozen=True)
class PlannerBackend:
    kind: str = "geometric"  # or "external"
    endpoint: str | None = None
    timeout: float = 30.0

    def __post_init__(self):
        if self.kind not in ("geometric", "external"):
            raise ValueError(f"unknown planner backend kind {self.kind!r}")
        if self.kind == "external" and not self.endpoint:
            raise ValueError("external planner backend requires an endpoint URL")


def decompose_steps(symbols: SymbolSet) -> list:
    """Group symbols into (ordinal, group) pairs sorted by step color.

    Raises EmptySymbolSet when nothing was recognized and MissingStepColor
    when the ordinals have a gap (a later step color without the earlier one).
    """
    groups = symbols.by_ordinal()
    if not groups:
        raise EmptySymbolSet("no recognized symbols to plan from")
    ordinals = sorted(groups)
    expected = list(range(1, len(ordinals) + 1))
    if ordinals != expected:
        missing = sorted(set(expected) - set(ordinals))
        raise MissingStepColor(
            f"step colors present {ordinals} skip ordinal(s) {missing}"
        )
    return [(o, groups[o]) for o in ordinals]


def classify_primitive(ordinal: int, group) -> StepPlan:
    """Map one color group onto its motion primitive.

    arrow -> MoveAToB, circle+arrow -> Rotate, circle -> PickOrSelect;
    anything else violates the grammar.
    """
    arrows = [s for s in group if isinstance(s, ArrowSymbol)]
    circles = [s for s in group if isinstance(s, CircleSymbol)]
    if len(arrows) == 1 and not circles:
        arrow = arrows[0]
        return StepPlan(
            ordinal=ordinal,
            primitive=PRIMITIVE_MOVE,
            symbols=(arrow,),
            action_type=ALPHA_TRANSLATION,
            keypoints2d=arrow.keypoints,
        )
    if len(arrows) == 1 and len(circles) == 1:
        arrow, circle = arrows[0], circles[0]
        return StepPlan(
            ordinal=ordinal,
            primitive=PRIMITIVE_ROTATE,
            symbols=(circle, arrow),
            action_type=ALPHA_ROTATION,
            keypoints2d=arrow.keypoints,
            rotation_center2d=circle.center,
        )
    if len(circles) == 1 and not arrows:
        circle = circles[0]
        return StepPlan(
            ordinal=ordinal,
            primitive=PRIMITIVE_PICK,
            symbols=(circle,),
            action_type=ALPHA_TRANSLATION,
            keypoints2d=(circle.center,),
        )
    raise UnsupportedSymbolCombination(
        f"step {ordinal} has {len(arrows)} arrow(s) and {len(circles)} circle(s); "
        "supported groups are one arrow, one circle, or one of each"
    )


_VERBS = {PRIMITIVE_MOVE: "move", PRIMITIVE_ROTATE: "rotate", PRIMITIVE_PICK: "pick"}


def _narrate(step: StepPlan) -> str:
    if step.primitive == PRIMITIVE_MOVE:
        a, b = step.keypoints2d[0], step.keypoints2d[-1]
        return (
            f"Step {step.ordinal}: move from ({a.u:.0f}, {a.v:.0f}) "
            f"to ({b.u:.0f}, {b.v:.0f})."
        )
    if step.primitive == PRIMITIVE_ROTATE:
        c = step.rotation_center2d
        return (
            f"Step {step.ordinal}: rotate about ({c.u:.0f}, {c.v:.0f}) "
            f"along the drawn arc."
        )
    c = step.keypoints2d[0]
    return f"Step {step.ordinal}: pick at ({c.u:.0f}, {c.v:.0f})."


def _actions_for(step: StepPlan, prev_end) -> tuple:
    """Executable action descriptors, with an inter-step transit when needed."""
    acts = []
    if prev_end is not None:
        first = step.keypoints2d[0]
        acts.append(ActionDescriptor("move_to", (first,), transit=True))
    if step.primitive == PRIMITIVE_MOVE:
        acts.append(ActionDescriptor("grasp", (step.keypoints2d[0],)))
        acts.append(ActionDescriptor("move_to", tuple(step.keypoints2d[1:])))
        acts.append(ActionDescriptor("release"))
    elif step.primitive == PRIMITIVE_ROTATE:
        acts.append(ActionDescriptor("grasp", (step.rotation_center2d,)))
        acts.append(
            ActionDescriptor(
                "rotate_about", (step.rotation_center2d,) + tuple(step.keypoints2d)
            )
        )
        acts.append(ActionDescriptor("release"))
    else:
        acts.append(ActionDescriptor("grasp", (step.keypoints2d[0],)))
    return tuple(acts)


def _step_endpoint(step: StepPlan):
    if step.primitive == PRIMITIVE_MOVE:
        return step.keypoints2d[-1]
    if step.primitive == PRIMITIVE_ROTATE:
        return step.rotation_center2d
    return step.keypoints2d[0]


def build_plan(symbols: SymbolSet, scene_label: str | None = None) -> Plan:
    """Deterministic plan: templated label, one narration and action list per
    step, transit motion linking each step to the previous step's endpoint."""
    steps = [classify_primitive(o, g) for o, g in decompose_steps(symbols)]
    verbs = [_VERBS[s.primitive] for s in steps]
    n = len(steps)
    label = f"{' then '.join(verbs)}, {n} step{'s' if n != 1 else ''}"
    if scene_label:
        label = f"{scene_label}: {label}"
    narration = tuple(_narrate(s) for s in steps)
    actions = []
    prev_end = None
    for step in steps:
        actions.append(_actions_for(step, prev_end))
        prev_end = _step_endpoint(step)
    return Plan(task_label=label, steps=tuple(steps), narration=narration, actions=tuple(actions))


def plan_via_external(annotated: RasterImage, backend: PlannerBackend) -> Plan:
    """POST the sketch to an external planning service and validate the reply.

    The request body is ``{"image": <base64 PNG>, "prompt": <text>}``; the
    response must be the documented Plan JSON schema.  A bad response raises
    SchemaViolation; it never falls back to the geometric planner.
    """
    if backend.kind != "external":
        raise ValueError("plan_via_external needs an external backend")
    buf = io.BytesIO()
    from PIL import Image
    import numpy as np

    Image.fromarray(np.asarray(annotated.pixels)).save(buf, format="PNG")
    body = {
        "image": base64.b64encode(buf.getvalue()).decode("ascii"),
        "prompt": DEFAULT_PROMPT,
    }
    try:
        resp = requests.post(backend.endpoint, json=body, timeout=backend.timeout)
    except requests.Timeout as err:
        raise PlannerTimeout(
            f"external planner did not answer within {backend.timeout}s"
        ) from err
    except requests.ConnectionError as err:
        raise PlannerUnreachable(f"cannot reach {backend.endpoint}: {err}") from err
    if resp.status_code != 200:
        raise PlannerUnreachable(
            f"external planner returned HTTP {resp.status_code}"
        )
    try:
        plan = Plan.from_json_dict(resp.json())
    except (ValueError, KeyError, TypeError) as err:
        raise SchemaViolation(f"external plan rejected: {err}") from err
    return plan
