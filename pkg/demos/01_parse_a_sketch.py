"""
Parse a hand-drawn instruction sketch
=====================================

Draw an arrow and a circle over a rendered observation, then run the
parser and look at what it extracted.
"""

import os

from sketchplan import sim
from sketchplan.golden import golden_world
from sketchplan.parse import parse_sketch
from sketchplan.plotting import overlay_keypoints
from sketchplan.strokes import SketchScript, SymbolDirective, render_sketch

out_dir = os.path.join(os.path.dirname(__file__), "out")
os.makedirs(out_dir, exist_ok=True)

# Render the observation the instruction is drawn on.
world = golden_world("move_object")
clean, depth = sim.render(world)

# A green arrow (step 1) and a blue circle (step 2), geometric style.
script = SketchScript((
    SymbolDirective("arrow", 1, ((102.0, 108.0), (160.0, 70.0), (215.0, 98.0)),
                    style="geometric", width=5),
    SymbolDirective("circle", 2, ((80.0, 180.0),), radius=22.0, width=4),
))
annotated, truths = render_sketch(clean, script)
annotated.to_file(os.path.join(out_dir, "sketch.png"))

# Parse: color segmentation, component classification, keypoint extraction.
symbols = parse_sketch(annotated, clean=clean)
for s in symbols.symbols:
    kind = type(s).__name__
    if hasattr(s, "keypoints"):
        kps = ", ".join(f"({k.u:.0f},{k.v:.0f})" for k in s.keypoints)
        print(f"step {s.color.ordinal} {kind} [{s.style}]: {kps}")
    else:
        print(f"step {s.color.ordinal} {kind}: center "
              f"({s.center.u:.0f},{s.center.v:.0f}) radius {s.radius:.1f}")

# Ground truth came from the script, so we can check the tail/tip accuracy.
arrow_truth = truths[0]
parsed = symbols.by_ordinal()[1][0]
print(f"tail error: {abs(parsed.start.u - arrow_truth.start[0]):.1f} px in u")
print(f"tip  error: {abs(parsed.end.u - arrow_truth.end[0]):.1f} px in u")

overlay_keypoints(annotated, symbols).to_file(os.path.join(out_dir, "overlay.png"))
print(f"wrote {out_dir}/sketch.png and {out_dir}/overlay.png")
