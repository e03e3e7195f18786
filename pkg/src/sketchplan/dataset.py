"""Synthetic instruction dataset: scripted sketches over rendered scenes,
with exact ground truth and deterministic seeding.

Records follow the book-style layout: an annotated observation, the clean
observation, a fixed default query, and the structured answer (task label,
narration, action list).  Each record carries 3-8 visual variants; variants
come in geometric/loose pairs that share control geometry so style ablations
have matched ground truth.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import sim
from .golden import SKILLS, golden_world
from .planning import build_plan
from .strokes import PRIM_ARROW, PRIM_CIRCLE, SketchScript, SymbolDirective, render_sketch
from .types import (
    DEFAULT_PALETTE,
    ROLE_CENTER,
    ROLE_END,
    ROLE_START,
    ROLE_WAYPOINT,
    STYLE_GEOMETRIC,
    STYLE_LOOSE,
    ArrowSymbol,
    CircleSymbol,
    Keypoint2,
    SymbolSet,
)

DEFAULT_QUERY = "What task do the drawn symbols describe, and what are the steps?"
SINGLE_STEP_FRACTION = 0.64

_PRIMS = ("move", "rotate", "pick")


@dataclass(frozen=True)
class SymbolSpec:
    """Sampled geometry for one symbol of one step, before styling."""

    primitive: str  # move | rotate | pick
    ordinal: int
    arrow_points: tuple | None
    circle_center: tuple | None
    circle_radius: float


def _bbox_of(spec: SymbolSpec, margin: float) -> tuple:
    pts = []
    if spec.arrow_points:
        pts += list(spec.arrow_points)
    if spec.circle_center:
        c, r = spec.circle_center, spec.circle_radius
        pts += [(c[0] - r, c[1] - r), (c[0] + r, c[1] + r)]
    us = [p[0] for p in pts]
    vs = [p[1] for p in pts]
    return (min(us) - margin, min(vs) - margin, max(us) + margin, max(vs) + margin)


def _overlaps(a, b) -> bool:
    return a[0] < b[2] and a[2] > b[0] and a[1] < b[3] and a[3] > b[1]


def sample_steps(width: int, height: int, n_steps: int, rng,
                 margin: float = 42.0, max_tries: int = 800) -> list:
    """Sample non-overlapping symbol geometry for an n-step instruction.

    Rejection sampling on inflated bounding boxes; when a large primitive
    will not fit it degrades to a pick circle, the smallest footprint.
    """
    specs = []
    boxes = []
    max_arrow = 170.0 if n_steps == 1 else 120.0
    for ordinal in range(1, n_steps + 1):
        prim = _PRIMS[int(rng.integers(0, len(_PRIMS)))]
        for attempt in range(max_tries):
            use = prim if attempt < max_tries // 2 else "pick"
            cand = _sample_one(use, ordinal, width, height, rng, margin, max_arrow)
            box = _bbox_of(cand, margin=14.0)
            if all(not _overlaps(box, b) for b in boxes):
                specs.append(cand)
                boxes.append(box)
                break
        else:
            raise RuntimeError("could not place symbols without overlap")
    return specs


def _sample_one(prim: str, ordinal: int, width: int, height: int, rng, margin,
                max_arrow: float = 170.0):
    lo = np.array([margin, margin])
    hi = np.array([width - margin, height - margin])
    if prim == "move":
        while True:
            p0 = rng.uniform(lo, hi)
            p1 = rng.uniform(lo, hi)
            d = np.linalg.norm(p1 - p0)
            if 80 <= d <= max_arrow:
                break
        pts = [tuple(p0), tuple(p1)]
        if rng.random() < 0.5:  # curved shaft
            mid = (p0 + p1) / 2
            perp = np.array([-(p1 - p0)[1], (p1 - p0)[0]]) / d
            off = rng.uniform(18, 40) * (1.0 if rng.random() < 0.5 else -1.0)
            pts = [tuple(p0), tuple(np.clip(mid + perp * off, lo, hi)), tuple(p1)]
        return SymbolSpec(prim, ordinal, tuple(pts), None, 0.0)
    if prim == "rotate":
        # circles need enough hole area to classify even with loose wobble;
        # the arc keeps a gap wide enough that barbs cannot bridge to the
        # circle, and sweeps far enough that the arrowhead does not dominate
        cr = float(rng.uniform(17, 20))
        ar = cr + float(rng.uniform(28, 32))
        ext = ar + 16
        c = rng.uniform(lo + ext, hi - ext)
        a0 = float(rng.uniform(0, 2 * math.pi))
        sweep = float(rng.uniform(max(math.pi / 3, 65.0 / ar), 2.4))
        sign = 1.0 if rng.random() < 0.5 else -1.0
        arc = tuple(
            (c[0] + ar * math.cos(a0 + sign * t), c[1] + ar * math.sin(a0 + sign * t))
            for t in (0.0, sweep / 2, sweep)
        )
        return SymbolSpec(prim, ordinal, arc, tuple(c), cr)
    c = rng.uniform(lo, hi)
    return SymbolSpec(prim, ordinal, None, tuple(c), float(rng.uniform(16, 26)))


def directives_for(specs, style: str, width: float, jitter: float, seed: int) -> SketchScript:
    ds = []
    for i, s in enumerate(specs):
        if s.circle_center is not None:
            # circles are drawn a little finer: heavy strokes and wobble
            # close up the hole that identifies them
            ds.append(
                SymbolDirective(
                    PRIM_CIRCLE, s.ordinal, (s.circle_center,), radius=s.circle_radius,
                    style=style, width=min(width, 5.0), jitter=min(jitter, 2.0),
                    seed=seed * 1009 + 2 * i,
                )
            )
        if s.arrow_points is not None:
            # rotate arcs are small symbols next to their circle; fat jittery
            # strokes there would bridge the gap or drown the arrowhead
            w = min(width, 5.0) if s.primitive == "rotate" else width
            j = min(jitter, 2.5) if s.primitive == "rotate" else jitter
            ds.append(
                SymbolDirective(
                    PRIM_ARROW, s.ordinal, s.arrow_points,
                    style=style, width=w, jitter=j, seed=seed * 1009 + 2 * i + 1,
                )
            )
    return SketchScript(tuple(ds))


def truth_symbols(specs) -> SymbolSet:
    """Ground-truth SymbolSet built from the sampled geometry (for labels)."""
    palette = {c.ordinal: c for c in DEFAULT_PALETTE}
    out = []
    for s in specs:
        color = palette[s.ordinal]
        if s.circle_center is not None:
            out.append(
                CircleSymbol(color, Keypoint2(s.circle_center[0], s.circle_center[1], ROLE_CENTER),
                             s.circle_radius)
            )
        if s.arrow_points is not None:
            pts = s.arrow_points
            kps = [Keypoint2(pts[0][0], pts[0][1], ROLE_START)]
            kps += [Keypoint2(p[0], p[1], ROLE_WAYPOINT) for p in pts[1:-1]]
            kps.append(Keypoint2(pts[-1][0], pts[-1][1], ROLE_END))
            out.append(ArrowSymbol(color, tuple(kps)))
    return SymbolSet(tuple(out))


def _truth_json(specs) -> list:
    out = []
    for i, s in enumerate(specs):
        entry = {"symbol": i, "ordinal": s.ordinal, "primitive": s.primitive}
        if s.arrow_points is not None:
            entry["arrow"] = {
                "start": list(s.arrow_points[0]),
                "end": list(s.arrow_points[-1]),
                "controls": [list(p) for p in s.arrow_points],
            }
        if s.circle_center is not None:
            entry["circle"] = {"center": list(s.circle_center), "radius": s.circle_radius}
        out.append(entry)
    return out


def generate_dataset(
    out_dir,
    count: int,
    seed: int,
    scenes=None,
    single_step_fraction: float = SINGLE_STEP_FRACTION,
    width_range=(3, 7),
    jitter_range=(2.0, 4.0),
    variant_range=(3, 8),
) -> dict:
    """Write ``count`` records plus a manifest; identical seeds give
    byte-identical output trees."""
    if count < 1:
        raise ValueError("count must be >= 1")
    os.makedirs(out_dir, exist_ok=True)
    if scenes is None:
        scenes = [golden_world(s) for s in SKILLS]
    rendered = []
    for world in scenes:
        img, _ = sim.render(world)
        rendered.append(img)

    records = []
    for k in range(count):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, k])))
        scene_idx = k % len(rendered)
        clean = rendered[scene_idx]
        n_steps = 1 if rng.random() < single_step_fraction else int(rng.integers(2, 4))
        specs = sample_steps(clean.width, clean.height, n_steps, rng)
        plan = build_plan(truth_symbols(specs))

        rec_id = f"rec_{k:05d}"
        rec_dir = os.path.join(out_dir, "records", rec_id)
        os.makedirs(rec_dir, exist_ok=True)
        clean_file = os.path.join("records", rec_id, "clean.png")
        clean.to_file(os.path.join(out_dir, clean_file))

        n_var = int(rng.integers(variant_range[0], variant_range[1] + 1))
        variants = []
        for j in range(n_var):
            pair = j // 2
            style = STYLE_GEOMETRIC if j % 2 == 0 else STYLE_LOOSE
            if pair > 0:  # vary the paths across pairs, keep them inside each pair
                v_rng = np.random.Generator(
                    np.random.PCG64(np.random.SeedSequence([seed, k, pair]))
                )
                v_specs = _perturb(specs, v_rng, clean.width, clean.height)
            else:
                v_specs = specs
            width = float(rng.integers(width_range[0], width_range[1] + 1))
            jitter = float(rng.uniform(*jitter_range)) if style == STYLE_LOOSE else 0.0
            script = directives_for(v_specs, style, width, jitter, seed=seed * 100003 + k * 97 + j)
            annotated, _ = render_sketch(clean, script)
            fname = os.path.join("records", rec_id, f"variant_{j:02d}.png")
            annotated.to_file(os.path.join(out_dir, fname))
            variants.append(
                {
                    "file": fname,
                    "style": style,
                    "pair": pair,
                    "stroke_width": width,
                    "jitter": jitter,
                    "ground_truth": _truth_json(v_specs),
                }
            )

        label = {
            "record_id": rec_id,
            "scene": scene_idx,
            "steps": n_steps,
            "query": DEFAULT_QUERY,
            "task_label": plan.task_label,
            "narration": list(plan.narration),
            "actions": [[a.to_json() for a in acts] for acts in plan.actions],
            "clean": clean_file,
            "variants": variants,
        }
        with open(os.path.join(rec_dir, "label.json"), "w") as f:
            json.dump(label, f, indent=2, sort_keys=True)
        records.append(label)

    manifest = {"seed": seed, "count": count, "query": DEFAULT_QUERY, "records": records}
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def _perturb(specs, rng, width, height) -> list:
    """Shift paths between variant pairs; rotate groups move rigidly so the
    arc keeps clear of its circle."""
    out = []
    for s in specs:
        if s.primitive == "rotate":
            d = rng.uniform(-6, 6, size=2)
            pts = tuple((p[0] + d[0], p[1] + d[1]) for p in s.arrow_points)
            c = (s.circle_center[0] + d[0], s.circle_center[1] + d[1])
            out.append(SymbolSpec(s.primitive, s.ordinal, pts, c, s.circle_radius))
            continue
        pts = None
        if s.arrow_points is not None:
            pts = tuple(
                (
                    float(np.clip(p[0] + rng.uniform(-8, 8), 20, width - 20)),
                    float(np.clip(p[1] + rng.uniform(-8, 8), 20, height - 20)),
                )
                for p in s.arrow_points
            )
        c = None
        if s.circle_center is not None:
            c = (
                float(np.clip(s.circle_center[0] + rng.uniform(-6, 6), 30, width - 30)),
                float(np.clip(s.circle_center[1] + rng.uniform(-6, 6), 30, height - 30)),
            )
        out.append(SymbolSpec(s.primitive, s.ordinal, pts, c, s.circle_radius))
    return out


def load_manifest(path) -> dict:
    with open(path) as f:
        return json.load(f)
