"""Acceptance suite: one test per criterion, each printing a pass line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import math
import time

import numpy as np
import pytest

from sketchplan import sim
from sketchplan.camera import backproject_grid, project_points
from sketchplan.dataset import _sample_one, directives_for, sample_steps, truth_symbols
from sketchplan.golden import SKILLS, golden_case, golden_world
from sketchplan.metrics import KeypointRecord, keypoint_metrics, style_ablation
from sketchplan.parse import parse_sketch
from sketchplan.planning import build_plan
from sketchplan.policy import PolicyConfig, execute_plan, execute_step, rotation_target_angle
from sketchplan.strokes import SketchScript, render_sketch
from sketchplan.types import ArrowSymbol, Pose, RasterImage

CFG = PolicyConfig()


def _ok(line):
    print(f"\n[PASS] {line}")


# ---------------------------------------------------------------------------
# shared sketch corpus for criteria 1 and 2
# ---------------------------------------------------------------------------

def _arrow_corpus(count=200):
    """Single-arrow sketches over a rendered scene: geometry, width, seed."""
    clean, _ = sim.render(golden_world("move_object"))
    cases = []
    rng = np.random.Generator(np.random.PCG64(2024))
    curved = 0
    for k in range(count):
        spec = _sample_one("move", 1, clean.width, clean.height, rng, margin=45.0)
        width = 3.0 + (k % 5)
        curved += len(spec.arrow_points) == 3
        cases.append((spec, width, k))
    assert curved and count - curved, "corpus must mix straight and curved"
    return clean, cases


def _score_style(clean, cases, style, jitter_rng=None):
    preds, gts = [], []
    for spec, width, k in cases:
        jitter = float(jitter_rng.uniform(2.0, 4.0)) if jitter_rng is not None else 0.0
        script = directives_for([spec], style, width, jitter, seed=9000 + k)
        annotated, truths = render_sketch(clean, script)
        rid = f"case{k}"
        t = truths[0]
        gts.append(KeypointRecord(rid, "arrow", "start", t.start[0], t.start[1]))
        gts.append(KeypointRecord(rid, "arrow", "end", t.end[0], t.end[1]))
        symbols = parse_sketch(annotated)
        arrows = [s for s in symbols.symbols if isinstance(s, ArrowSymbol)]
        if arrows:
            a = arrows[0]
            preds.append(KeypointRecord(rid, "arrow", "start", a.start.u, a.start.v))
            preds.append(KeypointRecord(rid, "arrow", "end", a.end.u, a.end.v))
    return preds, gts


class TestAcceptance:
    def test_01_parser_oracle_suite(self):
        """Geometric sketches: MD <= 10 px, mAP@50 >= 0.98, under 60 s."""
        t0 = time.time()
        clean, cases = _arrow_corpus(200)
        preds, gts = _score_style(clean, cases, "geometric")
        report = keypoint_metrics(preds, gts, threshold_px=50)
        elapsed = time.time() - t0
        assert report.md <= 10.0, f"MD {report.md:.2f} px exceeds 10"
        assert report.map >= 0.98, f"mAP {report.map:.3f} below 0.98"
        assert elapsed <= 60.0, f"suite took {elapsed:.1f} s"
        _ok(f"parser oracle: {len(cases)} geometric sketches, "
            f"MD={report.md:.2f} px, mAP@50={report.map:.3f}, {elapsed:.1f} s")

    def test_02_loose_style_degradation(self):
        """Loose sketches (jitter <= 4 px): mAP@50 >= 0.90, geometric >= loose."""
        clean, cases = _arrow_corpus(200)
        geo = _score_style(clean, cases, "geometric")
        loose = _score_style(clean, cases, "loose",
                             jitter_rng=np.random.Generator(np.random.PCG64(77)))
        abl = style_ablation({"geometric": geo, "loose": loose}, threshold_px=50)
        assert abl.loose.map >= 0.90, f"loose mAP {abl.loose.map:.3f} below 0.90"
        assert abl.geometric.map >= abl.loose.map, "geometric must not trail loose"
        _ok(f"loose degradation: mAP@50 geometric={abl.geometric.map:.3f} >= "
            f"loose={abl.loose.map:.3f} >= 0.90 (sign test p={abl.p_value:.2g})")

    def test_03_policy_invariant_suite(self):
        """1000 randomized single-step executions + Eq-angle oracle."""
        from test_policy import bare_world, move_step, rotate_step

        rng = np.random.Generator(np.random.PCG64(4242))
        checked = 0
        for run in range(1000):
            rotational = run % 2 == 1
            if rotational:
                center = rng.uniform(-0.3, 0.3, size=3)
                radius = float(rng.uniform(0.05, 0.3))
                n = int(rng.integers(2, 5))
                # keypoints on a sphere about the center
                dirs = rng.normal(size=(n, 3))
                dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
                kps = [center + radius * d for d in dirs]
                world = bare_world(gripper_pos=kps[0])
                trace = execute_step(rotate_step(), kps, world, CFG, center3=center)
                for rec in trace.records:
                    assert abs(np.linalg.norm(np.array(rec.position) - center) - radius) <= 1e-6
                eps = CFG.epsilon_rad
            else:
                n = int(rng.integers(1, 5))
                kps = [rng.uniform(-0.4, 0.4, size=3) for _ in range(n)]
                world = bare_world(gripper_pos=rng.uniform(-0.2, 0.2, size=3))
                trace = execute_step(move_step(), kps, world, CFG)
                for a, b in zip(trace.records, trace.records[1:]):
                    if a.index == b.index:
                        assert b.cost < a.cost, "translation cost must strictly decrease"
                eps = CFG.epsilon_m
            for a, b in zip(trace.records, trace.records[1:]):
                if b.index != a.index:
                    assert a.cost <= eps, "transition fired above epsilon"
            assert trace.records[-1].cost <= eps
            checked += 1
        assert checked == 1000

        oracle_rng = np.random.Generator(np.random.PCG64(777))
        pairs = 0
        while pairs < 10000:
            v1 = oracle_rng.normal(size=3)
            v2 = oracle_rng.normal(size=3)
            if min(np.linalg.norm(v1), np.linalg.norm(v2)) < 1e-3:
                continue
            want = math.atan2(np.linalg.norm(np.cross(v1, v2)), float(np.dot(v1, v2)))
            got = rotation_target_angle(v1, v2, np.zeros(3))
            assert abs(got - want) <= 1e-9
            pairs += 1
        _ok("policy invariants: 1000 randomized executions clean; "
            "angle oracle agreed on 10000 pairs within 1e-9")

    def test_04_lifter_round_trip(self):
        """project(backproject) identity and render/lift surface consistency."""
        rng = np.random.Generator(np.random.PCG64(31337))
        worlds = [golden_world(s) for s in SKILLS]
        shapes = ["box", "sphere", "cylinder"]
        while len(worlds) < 20:
            base = golden_world("move_object")
            base.objects = []
            for i in range(int(rng.integers(1, 4))):
                shape = shapes[int(rng.integers(0, 3))]
                size = rng.uniform(0.03, 0.08, size=3)
                if shape != "box":
                    size[1] = size[0]
                pos = np.array([rng.uniform(-0.15, 0.15), rng.uniform(-0.1, 0.1),
                                size[2] / 2 if shape != "sphere" else size[0] / 2])
                base.objects.append(
                    sim.SceneObject(f"o{i}", shape, size, Pose(pos), (150, 100, 60), True)
                )
            worlds.append(base)

        worst_rt, worst_surface = 0.0, 0.0
        for world in worlds:
            img, depth, hits, hit_mask = sim.render(world, with_hits=True)
            K = world.camera.intrinsics
            pts_cam = backproject_grid(depth, K).reshape(-1, 3)
            finite = np.isfinite(pts_cam[:, 2])
            px = project_points(pts_cam[finite], K)
            us, vs = np.meshgrid(np.arange(depth.width), np.arange(depth.height))
            grid = np.stack([us.ravel(), vs.ravel()], axis=1)[finite]
            worst_rt = max(worst_rt, float(np.abs(px - grid).max()))
            # camera-to-world, vectorized
            from sketchplan.types import quat_rotate

            pts_world = quat_rotate(world.camera.pose.orientation, pts_cam[hit_mask])
            pts_world = pts_world + world.camera.pose.position
            worst_surface = max(
                worst_surface,
                float(np.linalg.norm(pts_world - hits[hit_mask], axis=1).max()),
            )
        assert worst_rt <= 1e-9, f"round-trip error {worst_rt:.2e}"
        assert worst_surface <= 1e-6, f"surface error {worst_surface:.2e}"
        _ok(f"lifter round trip over {len(worlds)} scenes: "
            f"pixel error {worst_rt:.1e} <= 1e-9, surface error {worst_surface:.1e} <= 1e-6")

    def test_05_end_to_end_golden_suite(self):
        """All five skills succeed with alignment >= 0.9, bit-identical reruns."""
        t0 = time.time()
        results = {}
        for skill in SKILLS:
            outputs = []
            for _ in range(2):
                world, script, spec = golden_case(skill)
                clean, _ = sim.render(world)
                annotated, _ = render_sketch(clean, script)
                plan = build_plan(parse_sketch(annotated, clean=clean))
                run_world = world.copy()
                execution = execute_plan(plan, run_world, CFG)
                entry = sim.evaluate(execution, run_world, spec)
                outputs.append(
                    (execution.trace.to_ndjson(), sim.world_to_json(run_world), entry)
                )
            assert outputs[0][0] == outputs[1][0], f"{skill}: traces differ across runs"
            assert outputs[0][1] == outputs[1][1], f"{skill}: final worlds differ"
            entry = outputs[0][2]
            assert entry.success, f"{skill} failed: {entry.details}"
            assert entry.alignment >= 0.9, f"{skill} alignment {entry.alignment:.3f}"
            results[skill] = entry.alignment
        elapsed = time.time() - t0
        assert elapsed <= 30.0, f"golden suite took {elapsed:.1f} s"
        summary = ", ".join(f"{k}={v:.2f}" for k, v in results.items())
        _ok(f"golden suite: success on all 5 skills, alignment {summary}, {elapsed:.1f} s")

    def test_06_multi_step_ordering(self):
        """50 multi-step sketches: step events ordered, transit starts at the
        previous step's endpoint within epsilon."""
        rng = np.random.Generator(np.random.PCG64(6001))
        base = golden_world("move_object")
        cam = base.camera
        K = cam.intrinsics
        cases = 0
        while cases < 50:
            n_steps = 2 + (cases % 2)
            specs = sample_steps(cam.width, cam.height, n_steps, rng)
            world = base.copy()
            world.objects = []
            ok = True
            for i, spec in enumerate(specs):
                # put a graspable cube under each step's grasp pixel
                u, v = (spec.arrow_points[0] if spec.primitive == "move"
                        else spec.circle_center)
                x = (u - K.cx) * 0.9 / K.fx
                y = -(v - K.cy) * 0.9 / K.fy
                if abs(x) > 0.24 or abs(y) > 0.18:
                    ok = False
                    break
                world.objects.append(
                    sim.SceneObject(f"obj{i}", "box", np.array([0.04, 0.04, 0.04]),
                                    Pose(np.array([x, y, 0.02])), (200, 120, 40), True)
                )
            if not ok:
                continue
            width = float(rng.integers(3, 8))
            script = directives_for(specs, "geometric", width, 0.0, seed=7000 + cases)
            clean, _ = sim.render(world)
            annotated, _ = render_sketch(clean, script)
            symbols = parse_sketch(annotated, clean=clean)
            plan = build_plan(symbols)
            assert len(plan.steps) == n_steps
            execution = execute_plan(plan, world, CFG)

            step_seq = [e.step for e in execution.events]
            assert step_seq == sorted(step_seq), "step events out of order"
            transits = [e for e in execution.events if e.kind == "transit_start"]
            assert len(transits) == n_steps - 1
            for e in transits:
                prev = next(r for r in execution.step_runs if r.ordinal == e.step - 1)
                d = float(np.linalg.norm(np.array(e.position) - prev.endpoint()))
                assert d <= CFG.epsilon_m + 1e-9, (
                    f"transit starts {d:.4f} m from the previous endpoint"
                )
            cases += 1
        _ok("multi-step ordering: 50 sketches, events ordered and every "
            "transit started within epsilon of the previous endpoint")

    def test_07_metric_arithmetic(self):
        """Hand-computed MD/mAP on a 10-case fixture; mAP monotone in threshold."""
        dists = [0, 0, 0, 0, 0, 5, 12, 30, 60, 100]
        gt = [KeypointRecord(f"r{i}", "s", "end", 0.0, 0.0) for i in range(10)]
        preds = [KeypointRecord(f"r{i}", "s", "end", float(d), 0.0)
                 for i, d in enumerate(dists)]
        report = keypoint_metrics(preds, gt, threshold_px=50)
        assert report.md == pytest.approx(sum(dists) / 10)  # 20.7
        assert report.map == pytest.approx(8 / 10)
        maps = [keypoint_metrics(preds, gt, t).map for t in (10, 25, 50, 100)]
        assert maps == [pytest.approx(6 / 10), pytest.approx(7 / 10),
                        pytest.approx(8 / 10), pytest.approx(10 / 10)]
        _ok(f"metric arithmetic: MD={report.md} mAP@50={report.map}, "
            f"mAP over thresholds {maps} monotone")
