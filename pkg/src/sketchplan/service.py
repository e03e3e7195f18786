"""HTTP facade for the sketch console.

Scenes are stored in memory (optionally mirrored to a directory); execution
runs the full pipeline on a private copy of the world, so stored scenes are
never mutated and identical requests return identical bodies.

Endpoints:
  POST /scenes                  scene JSON -> {"id": ...}
  GET  /scenes/{id}             stored scene JSON
  GET  /scenes/{id}/render      observation PNG (?channel=depth -> .npy bytes)
  POST /scenes/{id}/execute     {image_b64 | strokes, options} -> full pipeline
"""

from __future__ import annotations

import base64
import io
import json
import os
import threading

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import sim
from .errors import SceneFormatError, SketchPlanError
from .segmentation import DEFAULT_TOLERANCE
from .strokes import directives_from_strokes, render_sketch
from .types import DEFAULT_PALETTE, RasterImage, palette_from_json

MAX_IMAGE_BYTES = 8 * 1024 * 1024
MAX_STROKE_POINTS = 20000


class SceneStore:
    """Concurrent-safe id -> scene JSON map with optional disk mirror."""

    def __init__(self, persist_dir=None):
        self._lock = threading.Lock()
        self._scenes: dict = {}
        self._next = 1
        self.persist_dir = persist_dir
        if persist_dir:
            os.makedirs(persist_dir, exist_ok=True)
            for name in sorted(os.listdir(persist_dir)):
                if name.endswith(".json"):
                    with open(os.path.join(persist_dir, name)) as f:
                        self._scenes[name[:-5]] = json.load(f)

    def add(self, scene_json: dict) -> str:
        with self._lock:
            sid = f"scene-{self._next:04d}"
            self._next += 1
            self._scenes[sid] = scene_json
            if self.persist_dir:
                with open(os.path.join(self.persist_dir, f"{sid}.json"), "w") as f:
                    json.dump(scene_json, f, indent=2)
            return sid

    def get(self, sid: str):
        with self._lock:
            return self._scenes.get(sid)


def _error(status: int, stage: str, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"stage": stage, "code": code, "message": message},
    )


def create_app(persist_dir=None) -> FastAPI:
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="sketchplan service")
    # dev tool: the browser console is served from a different port
    app.add_middleware(CORSMiddleware, allow_origins=["*"], allow_methods=["*"],
                       allow_headers=["*"])
    store = SceneStore(persist_dir)
    app.state.store = store

    @app.post("/scenes", status_code=201)
    async def post_scene(request: Request):
        body = await request.json()
        try:
            sim.world_from_json(body, palette=DEFAULT_PALETTE, tolerance=DEFAULT_TOLERANCE)
        except SceneFormatError as err:
            return _error(400, err.stage, err.code, str(err))
        sid = store.add(body)
        return {"id": sid}

    @app.get("/scenes/{sid}")
    async def get_scene(sid: str):
        scene = store.get(sid)
        if scene is None:
            return _error(404, "scene", "UnknownScene", f"no scene {sid!r}")
        return scene

    @app.get("/scenes/{sid}/render")
    async def get_render(sid: str, channel: str = "image"):
        scene = store.get(sid)
        if scene is None:
            return _error(404, "scene", "UnknownScene", f"no scene {sid!r}")
        world = sim.world_from_json(scene)
        image, depth = sim.render(world)
        if channel == "depth":
            buf = io.BytesIO()
            np.save(buf, np.asarray(depth.depths))
            return Response(content=buf.getvalue(), media_type="application/octet-stream")
        buf = io.BytesIO()
        from PIL import Image

        Image.fromarray(np.asarray(image.pixels)).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.post("/scenes/{sid}/execute")
    async def post_execute(sid: str, request: Request):
        scene = store.get(sid)
        if scene is None:
            return _error(404, "scene", "UnknownScene", f"no scene {sid!r}")
        body = await request.json()

        palette = DEFAULT_PALETTE
        if body.get("palette"):
            palette = palette_from_json(body["palette"])
        opts = {
            "tolerance": float(body.get("tolerance", DEFAULT_TOLERANCE)),
            "epsilon": float(body.get("epsilon", 0.01)),
            "epsilon_rad": float(body.get("epsilon_rad", 0.02)),
            "step_size": float(body.get("step_size", 0.01)),
            "backend": body.get("backend", "geometric"),
            "endpoint": body.get("endpoint"),
            "palette": None,
        }

        world = sim.world_from_json(scene)
        clean, _ = sim.render(world)

        if body.get("image_b64"):
            raw = body["image_b64"]
            if len(raw) > MAX_IMAGE_BYTES:
                return _error(413, "service", "ImageTooLarge",
                              f"image exceeds {MAX_IMAGE_BYTES} bytes")
            from PIL import Image

            try:
                data = base64.b64decode(raw)
                with Image.open(io.BytesIO(data)) as im:
                    annotated = RasterImage(np.asarray(im.convert("RGB")))
            except Exception as err:
                return _error(422, "service", "BadImage", f"cannot decode image: {err}")
        elif body.get("strokes"):
            strokes = body["strokes"]
            if sum(len(s.get("points", ())) for s in strokes) > MAX_STROKE_POINTS:
                return _error(413, "service", "TooManyStrokePoints",
                              f"stroke points exceed {MAX_STROKE_POINTS}")
            try:
                script = directives_from_strokes(strokes, palette)
                annotated, _ = render_sketch(clean, script)
            except (SketchPlanError, ValueError, KeyError) as err:
                stage = getattr(err, "stage", "service")
                code = getattr(err, "code", type(err).__name__)
                return _error(422, stage, code, str(err))
        else:
            return _error(422, "service", "MissingSketch",
                          "body needs image_b64 or strokes")

        try:
            symbols, plan, execution, entry, task_spec = _run(world, annotated, clean,
                                                              opts, palette)
        except SketchPlanError as err:
            return _error(422, err.stage, err.code, str(err))

        instructed = [[[k.u, k.v] for k in s.keypoints2d] for s in plan.steps]
        executed = []
        for run in execution.step_runs:
            executed.append(_project_px(world, run.followed))
        return {
            "scene_id": sid,
            "symbols": symbols.to_json(),
            "plan": plan.to_json_dict(),
            "trace": [r.to_json() for r in execution.trace.records],
            "events": execution.events_json(),
            "report": {
                "task": task_spec.to_json(),
                "success": entry.success,
                "alignment": entry.alignment,
                "per_step_alignment": list(entry.per_step_alignment),
                "details": entry.details,
            },
            "trajectory_px": {
                "instructed": instructed,
                "executed": executed,
            },
        }

    return app


def _run(world, annotated, clean, opts, palette):
    from .parse import parse_sketch
    from .planning import PlannerBackend, build_plan, plan_via_external
    from .policy import PolicyConfig, execute_plan
    from .cli import _infer_task_spec

    symbols = parse_sketch(annotated, clean=clean, palette=palette,
                           tolerance=opts["tolerance"])
    if opts["backend"] == "external":
        plan = plan_via_external(annotated,
                                 PlannerBackend(kind="external", endpoint=opts["endpoint"]))
    else:
        plan = build_plan(symbols)
    cfg = PolicyConfig(epsilon_m=opts["epsilon"], epsilon_rad=opts["epsilon_rad"],
                       step_size=opts["step_size"])
    execution = execute_plan(plan, world, cfg)
    spec = _infer_task_spec(plan, execution)
    entry = sim.evaluate(execution, world, spec)
    return symbols, plan, execution, entry, spec


def _project_px(world, points_world) -> list:
    from .camera import project_points

    pts = np.asarray(points_world, dtype=np.float64)
    if len(pts) == 0:
        return []
    cam = world.camera
    p_cam = np.array([cam.to_camera(p) for p in pts])
    px = project_points(p_cam, cam.intrinsics)
    return [[float(u), float(v)] for u, v in px]


app = create_app(persist_dir=os.environ.get("SKETCHPLAN_SCENES_DIR"))
