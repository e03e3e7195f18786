"""Color segmentation: split an annotated image into per-step-color masks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import NoSymbolsFound
from .types import DEFAULT_PALETTE, RasterImage, validate_palette

# 8-connectivity structuring element, used for components everywhere.
EIGHT = np.ones((3, 3), dtype=bool)

DEFAULT_TOLERANCE = 100.0


@dataclass(frozen=True, eq=False)
class ColorMask:
    """Boolean bitmap of all pixels assigned to one palette color."""

    color: object
    bitmap: np.ndarray
    component_count: int

    def __post_init__(self):
        bm = np.asarray(self.bitmap, dtype=bool)
        bm.setflags(write=False)
        object.__setattr__(self, "bitmap", bm)


def segment_by_color(
    annotated: RasterImage,
    clean: RasterImage | None = None,
    palette=DEFAULT_PALETTE,
    tolerance: float = DEFAULT_TOLERANCE,
) -> list:
    """Assign sketch pixels to palette colors by nearest RGB distance.

    A pixel joins the mask of the nearest palette color whose Euclidean RGB
    distance is <= tolerance; ties go to the lowest ordinal.  When ``clean``
    is given, pixels identical in both images are excluded first, so only the
    drawn-on difference region is considered.

    Returns one ColorMask per palette color actually present, sorted by
    ordinal.  Raises NoSymbolsFound if every mask is empty.
    """
    validate_palette(palette, tolerance)
    colors = sorted(palette, key=lambda c: c.ordinal)
    img = annotated.pixels.astype(np.int64)

    if clean is not None:
        if (clean.height, clean.width) != (annotated.height, annotated.width):
            raise ValueError("clean image dimensions must match the annotated image")
        consider = np.any(annotated.pixels != clean.pixels, axis=2)
    else:
        consider = np.ones(img.shape[:2], dtype=bool)

    rgb = np.array([c.rgb for c in colors], dtype=np.int64)  # (K, 3)
    d2 = ((img[:, :, None, :] - rgb[None, None, :, :]) ** 2).sum(axis=3)  # (H, W, K)
    nearest = d2.argmin(axis=2)  # lowest index wins ties; colors sorted by ordinal
    within = d2.min(axis=2) <= tolerance * tolerance

    masks = []
    for k, color in enumerate(colors):
        bitmap = consider & within & (nearest == k)
        if not bitmap.any():
            continue
        _, count = ndimage.label(bitmap, structure=EIGHT)
        masks.append(ColorMask(color=color, bitmap=bitmap, component_count=count))
    if not masks:
        raise NoSymbolsFound("no pixels matched any palette color")
    return masks


@dataclass(frozen=True, eq=False)
class Component:
    """One 8-connected component of a color mask, in image coordinates.

    ``mask`` is a tight local bitmap; ``offset`` is its (v0, u0) corner in the
    source image.  ``coords`` lists component pixels as (v, u) rows, sorted
    row-major for determinism.
    """

    color: object
    index: int
    mask: np.ndarray
    offset: tuple
    coords: np.ndarray

    @property
    def pixel_count(self) -> int:
        return len(self.coords)

    @property
    def bbox(self) -> tuple:
        """(u0, v0, u1, v1) inclusive, in image coordinates."""
        v0, u0 = self.offset
        h, w = self.mask.shape
        return (u0, v0, u0 + w - 1, v0 + h - 1)


def mask_components(mask: ColorMask) -> list:
    """Split a ColorMask into its 8-connected components, row-major order."""
    labels, count = ndimage.label(mask.bitmap, structure=EIGHT)
    slices = ndimage.find_objects(labels)
    out = []
    for i in range(count):
        sl = slices[i]
        local = labels[sl] == (i + 1)
        local = np.ascontiguousarray(local)
        local.setflags(write=False)
        vs, us = np.nonzero(local)
        coords = np.stack([vs + sl[0].start, us + sl[1].start], axis=1)
        out.append(
            Component(
                color=mask.color,
                index=i,
                mask=local,
                offset=(sl[0].start, sl[1].start),
                coords=coords,
            )
        )
    return out
