import json
import os
import shutil
from importlib import resources

import numpy as np
import pytest

from sketchplan import sim
from sketchplan.cli import main
from sketchplan.golden import golden_case
from sketchplan.strokes import render_sketch
from sketchplan.types import RasterImage


@pytest.fixture
def golden_files(tmp_path):
    """Scene JSON + clean/sketch PNGs for the golden move task."""
    world, script, spec = golden_case("move_object")
    clean, _ = sim.render(world)
    annotated, _ = render_sketch(clean, script)
    scene = tmp_path / "scene.json"
    shutil.copy(
        str(resources.files("sketchplan").joinpath("data/scenes/move_object.json")),
        scene,
    )
    clean_p = tmp_path / "clean.png"
    sketch_p = tmp_path / "sketch.png"
    clean.to_file(clean_p)
    annotated.to_file(sketch_p)
    task = tmp_path / "task.json"
    task.write_text(json.dumps({"kind": "move", "target_object_id": "cube"}))
    return {"scene": scene, "clean": clean_p, "sketch": sketch_p, "task": task}


def test_render_writes_image_and_depth(golden_files, tmp_path):
    out = tmp_path / "obs.png"
    depth = tmp_path / "obs.npy"
    rc = main(["render", "--scene", str(golden_files["scene"]),
               "--out", str(out), "--depth", str(depth)])
    assert rc == 0
    img = RasterImage.from_file(out)
    assert (img.width, img.height) == (320, 240)
    assert np.isfinite(np.load(depth)).any()


def test_parse_outputs_symbols_and_overlay(golden_files, tmp_path, capsys):
    out = tmp_path / "symbols.json"
    overlay = tmp_path / "overlay.png"
    rc = main(["parse", "--image", str(golden_files["sketch"]),
               "--clean", str(golden_files["clean"]),
               "-o", str(out), "--overlay", str(overlay)])
    assert rc == 0
    symbols = json.loads(out.read_text())
    assert len(symbols["symbols"]) == 1
    assert symbols["symbols"][0]["kind"] == "arrow"
    assert overlay.exists()


def test_parse_blank_image_errors_with_json(tmp_path, capsys):
    blank = tmp_path / "blank.png"
    RasterImage.full(64, 48, (30, 30, 30)).to_file(blank)
    rc = main(["parse", "--image", str(blank)])
    assert rc == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["code"] == "NoSymbolsFound"
    assert err["stage"] == "parse"


def test_run_golden_move(golden_files, tmp_path, capsys):
    out = tmp_path / "out"
    rc = main(["run", "--scene", str(golden_files["scene"]),
               "--sketch", str(golden_files["sketch"]),
               "--clean", str(golden_files["clean"]),
               "--task", str(golden_files["task"]),
               "--out-dir", str(out)])
    assert rc == 0
    report = json.loads((out / "report.json").read_text())
    assert report["success"] is True
    assert report["alignment"] >= 0.9
    assert (out / "plan.json").exists()
    assert (out / "trajectory.svg").read_text().startswith("<svg")
    trace_lines = (out / "trace.ndjson").read_text().splitlines()
    assert len(trace_lines) > 10
    json.loads(trace_lines[0])


def test_run_ordinal_gap_fails_at_plan_stage(golden_files, tmp_path, capsys):
    # redraw the sketch in step color 2 only
    from conftest import arrow, draw

    clean = RasterImage.from_file(golden_files["clean"])
    annotated, _ = draw(clean, [arrow([(100, 120), (220, 120)], ordinal=2)])
    bad = tmp_path / "bad.png"
    annotated.to_file(bad)
    rc = main(["run", "--scene", str(golden_files["scene"]), "--sketch", str(bad),
               "--out-dir", str(tmp_path / "o")])
    assert rc == 2
    err = json.loads(capsys.readouterr().err.strip())
    assert err["stage"] == "plan"
    assert err["code"] == "MissingStepColor"


def test_generate_same_seed_identical(tmp_path, capsys):
    for name in ("a", "b"):
        rc = main(["generate", "--out-dir", str(tmp_path / name),
                   "--count", "4", "--seed", "7"])
        assert rc == 0
    m1 = (tmp_path / "a" / "manifest.json").read_text()
    m2 = (tmp_path / "b" / "manifest.json").read_text()
    assert m1 == m2


def test_eval_threshold_monotone(tmp_path, capsys):
    rc = main(["generate", "--out-dir", str(tmp_path / "ds"), "--count", "4",
               "--seed", "3"])
    assert rc == 0
    maps = {}
    for thr in ("10", "50"):
        rc = main(["eval", "--dataset", str(tmp_path / "ds"),
                   "--threshold-px", thr, "-o", str(tmp_path / f"rep{thr}.json")])
        assert rc == 0
        rep = json.loads((tmp_path / f"rep{thr}.json").read_text())
        maps[thr] = np.mean([s["map"] for s in rep["styles"].values()])
    assert maps["10"] <= maps["50"]


def test_eval_ablation_table(tmp_path, capsys):
    main(["generate", "--out-dir", str(tmp_path / "ds"), "--count", "4", "--seed", "5"])
    rc = main(["eval", "--dataset", str(tmp_path / "ds"), "--ablation"])
    assert rc == 0
    out = capsys.readouterr().out
    assert "geometric" in out and "sign test" in out


def test_run_external_backend(golden_files, tmp_path, monkeypatch, capsys):
    """--backend external sources the plan from the mock endpoint."""
    import http.server
    import threading

    from sketchplan.parse import parse_sketch
    from sketchplan.planning import build_plan

    annotated = RasterImage.from_file(golden_files["sketch"])
    clean = RasterImage.from_file(golden_files["clean"])
    plan = build_plan(parse_sketch(annotated, clean=clean))
    body = plan.to_json().encode()

    class Handler(http.server.BaseHTTPRequestHandler):
        def do_POST(self):
            self.rfile.read(int(self.headers["Content-Length"]))
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *a):
            pass

    server = http.server.HTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    try:
        out = tmp_path / "out"
        rc = main(["run", "--scene", str(golden_files["scene"]),
                   "--sketch", str(golden_files["sketch"]),
                   "--task", str(golden_files["task"]),
                   "--backend", "external",
                   "--endpoint", f"http://127.0.0.1:{server.server_address[1]}/plan",
                   "--out-dir", str(out)])
        assert rc == 0
        got = json.loads((out / "plan.json").read_text())
        assert got == plan.to_json_dict()
    finally:
        server.shutdown()


def test_config_file_precedence(golden_files, tmp_path, capsys):
    red_only = tmp_path / "pal_red.json"
    red_only.write_text(json.dumps([{"rgb": [255, 0, 0], "ordinal": 1}]))
    default = tmp_path / "pal_default.json"
    default.write_text(json.dumps([
        {"rgb": [0, 255, 94], "ordinal": 1},
        {"rgb": [0, 255, 247], "ordinal": 2},
        {"rgb": [255, 106, 138], "ordinal": 3},
    ]))
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"palette": str(red_only)}))
    rc = main(["parse", "--image", str(golden_files["sketch"]),
               "--config", str(cfg), "-o", str(tmp_path / "s.json")])
    assert rc == 2  # config applied: green strokes do not match a red palette
    err = json.loads(capsys.readouterr().err.strip())
    assert err["code"] == "NoSymbolsFound"
    rc = main(["parse", "--image", str(golden_files["sketch"]),
               "--config", str(cfg), "--palette", str(default),
               "-o", str(tmp_path / "s.json")])
    assert rc == 0  # flag wins over config


def test_batch_runs_jobs(golden_files, tmp_path, capsys):
    jobs = [
        {"name": "move", "scene": str(golden_files["scene"]),
         "sketch": str(golden_files["sketch"]), "clean": str(golden_files["clean"]),
         "task": {"kind": "move", "target_object_id": "cube"}},
    ]
    jf = tmp_path / "jobs.json"
    jf.write_text(json.dumps(jobs))
    rc = main(["batch", "--jobs", str(jf)])
    assert rc == 0
    results = json.loads(capsys.readouterr().out)
    assert results[0]["success"] is True
