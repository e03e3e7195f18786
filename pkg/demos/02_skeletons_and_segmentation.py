"""
Inside the parser: masks, thinning, head detection
==================================================

The parser works in three moves: split pixels by palette color, thin each
component to a one-pixel skeleton, then read the arrow geometry off the
skeleton path.  This script shows the intermediate artifacts.
"""

import numpy as np

from sketchplan.segmentation import mask_components, segment_by_color
from sketchplan.skeleton import arc_lengths, main_path, skeletonize
from sketchplan.strokes import SketchScript, SymbolDirective, render_sketch
from sketchplan.types import RasterImage

clean = RasterImage.full(200, 90, (70, 60, 50))
script = SketchScript((
    SymbolDirective("arrow", 1, ((25.0, 45.0), (170.0, 45.0)), width=5),
))
annotated, _ = render_sketch(clean, script)

# 1. color segmentation: one mask per palette color present
masks = segment_by_color(annotated)
mask = masks[0]
print(f"palette color {mask.color.rgb} -> {mask.bitmap.sum()} px, "
      f"{mask.component_count} component(s)")

# 2. thinning: a one-pixel-wide skeleton of the stroke
comp = mask_components(mask)[0]
skel = skeletonize(comp.mask)
path = main_path(skel)
arcs = arc_lengths(path)
print(f"skeleton: {len(skel.points)} px, main path {arcs[-1]:.0f} px long, "
      f"{len(skel.endpoints())} endpoints")

# ASCII view (component-local coordinates): stroke pixels are dots,
# skeleton pixels are #
sm = skel.mask
h, w = comp.mask.shape
for v in range(h):
    row = "".join(
        "#" if sm[v, u] else ("." if comp.mask[v, u] else " ")
        for u in range(0, min(w, 72))
    )
    print(row)

# 3. the arrowhead thickens one end; that asymmetry picks the head
from sketchplan.symbols import extract_arrow_keypoints

sym = extract_arrow_keypoints(comp)
print(f"tail ({sym.start.u:.0f},{sym.start.v:.0f})  "
      f"tip ({sym.end.u:.0f},{sym.end.v:.0f})  style {sym.style}")
