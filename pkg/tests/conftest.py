import numpy as np
import pytest

from sketchplan.strokes import SketchScript, SymbolDirective, render_sketch
from sketchplan.types import RasterImage

BG = (70, 60, 50)


@pytest.fixture
def blank():
    return RasterImage.full(320, 240, BG)


def draw(clean, directives):
    """Render a list of directives over a clean image; returns (img, truths)."""
    return render_sketch(clean, SketchScript(tuple(directives)))


def arrow(points, ordinal=1, style="geometric", width=5.0, jitter=0.0, seed=0):
    return SymbolDirective("arrow", ordinal, tuple(points), style=style,
                           width=width, jitter=jitter, seed=seed)


def circle(center, radius, ordinal=1, style="geometric", width=5.0, jitter=0.0, seed=0):
    return SymbolDirective("circle", ordinal, (tuple(center),), radius=radius,
                           style=style, width=width, jitter=jitter, seed=seed)


@pytest.fixture
def rng():
    return np.random.Generator(np.random.PCG64(1234))
