"""Command-line entry point wiring the full pipeline.

Subcommands: render, parse, run, generate, eval, batch.  Every command is
deterministic given its flags and seed; failures print one machine-readable
JSON object on stderr ({stage, code, message}) and exit nonzero.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import sim
from .camera import project_points
from .errors import SketchPlanError
from .metrics import (
    DEFAULT_THRESHOLD_PX,
    evaluate_parser_on_manifest,
    keypoint_metrics,
    style_ablation,
)
from .parse import parse_sketch
from .planning import PlannerBackend, build_plan, plan_via_external
from .plotting import overlay_keypoints, trajectory_svg
from .policy import PolicyConfig, execute_plan
from .segmentation import DEFAULT_TOLERANCE
from .types import DEFAULT_PALETTE, RasterImage, palette_from_json

DEFAULTS = {
    "tolerance": DEFAULT_TOLERANCE,
    "epsilon": 0.01,
    "epsilon_rad": 0.02,
    "step_size": 0.01,
    "max_ticks": 2000,
    "threshold_px": DEFAULT_THRESHOLD_PX,
    "seed": 0,
    "backend": "geometric",
    "endpoint": None,
    "palette": None,
}


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of flag defaults (flags win)")
    p.add_argument("--palette", help="palette JSON file [{rgb, ordinal}, ...]")
    p.add_argument("--tolerance", type=float, help="RGB segmentation tolerance")
    p.add_argument("--epsilon", type=float, help="translation epsilon, meters")
    p.add_argument("--epsilon-rad", type=float, dest="epsilon_rad",
                   help="rotation epsilon, radians")
    p.add_argument("--step-size", type=float, dest="step_size",
                   help="control step, meters per tick")
    p.add_argument("--max-ticks", type=int, dest="max_ticks",
                   help="tick budget per keypoint")
    p.add_argument("--threshold-px", type=float, dest="threshold_px",
                   help="keypoint hit threshold, pixels")
    p.add_argument("--seed", type=int, help="global random seed")
    p.add_argument("--backend", choices=["geometric", "external"])
    p.add_argument("--endpoint", help="external planner URL")


def _resolve(args) -> dict:
    cfg = {}
    if args.config:
        with open(args.config) as f:
            cfg = json.load(f)
    out = {}
    for key, default in DEFAULTS.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key, default)
    return out


def _load_palette(opts):
    if not opts["palette"]:
        return DEFAULT_PALETTE
    with open(opts["palette"]) as f:
        return palette_from_json(json.load(f))


def _policy_config(opts) -> PolicyConfig:
    return PolicyConfig(
        epsilon_m=opts["epsilon"],
        epsilon_rad=opts["epsilon_rad"],
        step_size=opts["step_size"],
        max_ticks_per_keypoint=opts.get("max_ticks", 2000),
    )


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_render(args) -> int:
    opts = _resolve(args)
    world = sim.load_scene(args.scene, palette=_load_palette(opts), tolerance=opts["tolerance"])
    image, depth = sim.render(world)
    image.to_file(args.out)
    if args.depth:
        depth.to_npy(args.depth)
    return 0


def cmd_parse(args) -> int:
    opts = _resolve(args)
    annotated = RasterImage.from_file(args.image)
    clean = RasterImage.from_file(args.clean) if args.clean else None
    symbols = parse_sketch(
        annotated, clean=clean, palette=_load_palette(opts), tolerance=opts["tolerance"]
    )
    text = json.dumps(symbols.to_json(), indent=2)
    if args.output:
        with open(args.output, "w") as f:
            f.write(text + "\n")
    else:
        print(text)
    if args.overlay:
        overlay_keypoints(annotated, symbols).to_file(args.overlay)
    return 0


def _project_to_pixels(world, points_world) -> np.ndarray:
    cam = world.camera
    pts = np.asarray(points_world, dtype=np.float64)
    if len(pts) == 0:
        return np.zeros((0, 2))
    p_cam = np.array([cam.to_camera(p) for p in pts])
    return project_points(p_cam, cam.intrinsics)


def run_pipeline(world, annotated, clean, opts, task_spec=None):
    """Shared core of run/batch: parse, plan, execute, evaluate."""
    palette = _load_palette(opts)
    symbols = parse_sketch(annotated, clean=clean, palette=palette,
                           tolerance=opts["tolerance"])
    if opts["backend"] == "external":
        backend = PlannerBackend(kind="external", endpoint=opts["endpoint"])
        plan = plan_via_external(annotated, backend)
    else:
        plan = build_plan(symbols)
    execution = execute_plan(plan, world, _policy_config(opts))
    if task_spec is None:
        task_spec = _infer_task_spec(plan, execution)
    entry = sim.evaluate(execution, world, task_spec)
    return symbols, plan, execution, entry, task_spec


def _infer_task_spec(plan, execution) -> sim.TaskSpec:
    """Default scoring: the last step, against the object it grasped."""
    last = plan.steps[-1]
    kind = {"MoveAToB": "move", "Rotate": "rotate", "PickOrSelect": "pick"}[last.primitive]
    target = None
    for e in execution.events:
        if e.kind == "grasp" and e.step == last.ordinal:
            target = e.info
    return sim.TaskSpec(kind=kind, target_object_id=target)


def cmd_run(args) -> int:
    opts = _resolve(args)
    palette = _load_palette(opts)
    world = sim.load_scene(args.scene, palette=palette, tolerance=opts["tolerance"])
    annotated = RasterImage.from_file(args.sketch)
    clean = RasterImage.from_file(args.clean) if args.clean else None
    task_spec = None
    if args.task:
        with open(args.task) as f:
            d = json.load(f)
        task_spec = sim.TaskSpec(**d)

    symbols, plan, execution, entry, task_spec = run_pipeline(
        world, annotated, clean, opts, task_spec
    )

    out = args.out_dir
    os.makedirs(out, exist_ok=True)
    with open(os.path.join(out, "plan.json"), "w") as f:
        f.write(plan.to_json(indent=2) + "\n")
    with open(os.path.join(out, "trace.ndjson"), "w") as f:
        f.write(execution.trace.to_ndjson())
    report = {
        "task": task_spec.to_json(),
        "success": entry.success,
        "alignment": entry.alignment,
        "per_step_alignment": list(entry.per_step_alignment),
        "details": entry.details,
        "events": execution.events_json(),
    }
    with open(os.path.join(out, "report.json"), "w") as f:
        json.dump(report, f, indent=2)
        f.write("\n")

    instructed = [np.array([[k.u, k.v] for k in s.keypoints2d]) for s in plan.steps]
    executed = [_project_to_pixels(world, r.followed) for r in execution.step_runs]
    svg = trajectory_svg(world.camera.width, world.camera.height, instructed, executed)
    with open(os.path.join(out, "trajectory.svg"), "w") as f:
        f.write(svg + "\n")
    print(json.dumps({"success": entry.success, "alignment": entry.alignment}))
    return 0


def cmd_generate(args) -> int:
    opts = _resolve(args)
    from .dataset import generate_dataset

    scenes = None
    if args.scenes:
        palette = _load_palette(opts)
        scenes = [sim.load_scene(p, palette=palette, tolerance=opts["tolerance"])
                  for p in args.scenes]
    manifest = generate_dataset(
        args.out_dir,
        count=args.count,
        seed=opts["seed"],
        scenes=scenes,
        single_step_fraction=args.single_step_fraction,
    )
    print(json.dumps({"records": manifest["count"], "out_dir": args.out_dir}))
    return 0


def cmd_eval(args) -> int:
    opts = _resolve(args)
    from .dataset import load_manifest

    manifest = load_manifest(os.path.join(args.dataset, "manifest.json"))
    per_style = evaluate_parser_on_manifest(
        manifest, args.dataset, tolerance=opts["tolerance"],
        use_clean=args.use_clean, paired_only=args.ablation,
    )
    reports = {}
    for style, (preds, gts) in sorted(per_style.items()):
        reports[style] = keypoint_metrics(preds, gts, opts["threshold_px"]).to_json()
    result = {"styles": reports}
    if args.ablation:
        abl = style_ablation(
            {k: v for k, v in per_style.items()}, opts["threshold_px"]
        )
        result["ablation"] = abl.to_json()
        print(abl.to_table())
    else:
        for style, rep in reports.items():
            print(f"[{style}] MD={rep['md']:.2f} mAP@{int(opts['threshold_px'])}px={rep['map']:.3f}")
    if args.output:
        with open(args.output, "w") as f:
            json.dump(result, f, indent=2)
            f.write("\n")
    return 0


def _run_job(job_opts):
    job, opts = job_opts
    world = sim.load_scene(job["scene"])
    annotated = RasterImage.from_file(job["sketch"])
    clean = RasterImage.from_file(job["clean"]) if job.get("clean") else None
    spec = sim.TaskSpec(**job["task"]) if job.get("task") else None
    try:
        _, _, execution, entry, _ = run_pipeline(world, annotated, clean, opts, spec)
        return {"job": job.get("name", job["sketch"]), "success": entry.success,
                "alignment": entry.alignment}
    except SketchPlanError as err:
        return {"job": job.get("name", job["sketch"]), "error": err.payload()}


def cmd_batch(args) -> int:
    opts = _resolve(args)
    with open(args.jobs) as f:
        jobs = json.load(f)
    work = [(job, opts) for job in jobs]
    if args.workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_job, work))
    else:
        results = [_run_job(w) for w in work]
    print(json.dumps(results, indent=2))
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sketchplan",
                                 description="sketch instructions to simulated manipulation")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a scene to an image (+ depth)")
    p.add_argument("--scene", required=True)
    p.add_argument("--out", required=True, help="observation PNG path")
    p.add_argument("--depth", help="optional depth .npy path")
    _add_common(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("parse", help="extract symbols from a sketch image")
    p.add_argument("--image", required=True, help="annotated sketch PNG")
    p.add_argument("--clean", help="clean observation PNG for differencing")
    p.add_argument("-o", "--output", help="write SymbolSet JSON here (default stdout)")
    p.add_argument("--overlay", help="write keypoint overlay PNG here")
    _add_common(p)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("run", help="full pipeline on a scene + sketch")
    p.add_argument("--scene", required=True)
    p.add_argument("--sketch", required=True)
    p.add_argument("--clean", help="clean observation PNG")
    p.add_argument("--task", help="TaskSpec JSON file (default: inferred)")
    p.add_argument("--out-dir", default=".", dest="out_dir")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("generate", help="write a synthetic instruction dataset")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--scenes", nargs="*", help="scene JSON files (default: golden five)")
    p.add_argument("--single-step-fraction", type=float, default=0.64,
                   dest="single_step_fraction")
    _add_common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("eval", help="score the parser against a dataset")
    p.add_argument("--dataset", required=True, help="directory with manifest.json")
    p.add_argument("--ablation", action="store_true", help="paired style comparison")
    p.add_argument("--use-clean", action="store_true", dest="use_clean")
    p.add_argument("-o", "--output", help="write report JSON here")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("batch", help="run many scene+sketch jobs")
    p.add_argument("--jobs", required=True, help="JSON list of jobs")
    p.add_argument("--workers", type=int, default=1)
    _add_common(p)
    p.set_defaults(func=cmd_batch)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SketchPlanError as err:
        print(json.dumps(err.payload()), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
