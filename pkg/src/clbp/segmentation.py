"""Face localization: SMQT labelling, skin-hue masking and tight cropping."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from .errors import ColorspaceError, EmptyInputError, NoSkinRegionError
from .imaging import Colorspace, PlanarImage, rgb_to_hsi

__all__ = [
    "BBox",
    "FaceRegion",
    "smqt",
    "skin_mask",
    "fill_holes",
    "largest_component_bbox",
    "segment_face",
]

HUE_LOW = 0.17
HUE_HIGH = 0.63
SAT_MIN = 0.1

_EIGHT = np.ones((3, 3), dtype=bool)


class BBox(NamedTuple):
    x: int
    y: int
    w: int
    h: int


@dataclass(frozen=True, eq=False)
class FaceRegion:
    bbox: BBox
    crop: PlanarImage
    mask: np.ndarray  # bool, aligned with crop


def smqt(region: np.ndarray, level: int = 1) -> np.ndarray:
    """Successive mean quantization transform.

    Each level splits every current group at its mean; values ``>= mean``
    take bit 1. The first split is the most significant bit, so labels lie in
    ``[0, 2**level - 1]``.
    """
    d = np.asarray(region, dtype=np.float64)
    if d.size == 0:
        raise EmptyInputError("smqt of an empty region")
    if not 1 <= level <= 8:
        raise ValueError(f"level must be in [1, 8], got {level}")
    flat = d.ravel()
    labels = np.zeros(flat.shape, dtype=np.int64)
    for _ in range(level):
        # group sums/counts computed per current label; compare v*n >= sum to avoid division
        counts = np.bincount(labels, minlength=1)
        sums = np.bincount(labels, weights=flat, minlength=1)
        upper = flat * counts[labels] >= sums[labels]
        labels = 2 * labels + upper
    return labels.reshape(d.shape)


def skin_mask(img: PlanarImage) -> np.ndarray:
    """Skin iff ``(H < 0.17 or H > 0.63) and S > 0.1``."""
    if img.colorspace is not Colorspace.HSI:
        raise ColorspaceError(f"skin_mask expects HSI input, got {img.colorspace.value}")
    h, s, _ = img.planes
    return ((h < HUE_LOW) | (h > HUE_HIGH)) & (s > SAT_MIN)


def fill_holes(mask: np.ndarray) -> np.ndarray:
    """Set background pockets not 4-connected to the border to foreground."""
    return ndimage.binary_fill_holes(np.asarray(mask, dtype=bool))


def _largest_label(mask: np.ndarray) -> tuple[np.ndarray, int]:
    labels, n = ndimage.label(mask, structure=_EIGHT)
    if n == 0:
        raise NoSkinRegionError()
    sizes = np.bincount(labels.ravel())[1:]
    # labels are assigned in raster order of each component's first pixel,
    # so argmax's first-hit rule breaks ties toward the topmost-then-leftmost
    return labels, int(np.argmax(sizes)) + 1


def largest_component_bbox(mask: np.ndarray) -> BBox:
    """Tight ``(x, y, w, h)`` box of the largest 8-connected component."""
    mask = np.asarray(mask, dtype=bool)
    labels, best = _largest_label(mask)
    rows, cols = ndimage.find_objects(labels)[best - 1]
    return BBox(cols.start, rows.start, cols.stop - cols.start, rows.stop - rows.start)


def segment_face(img: PlanarImage) -> FaceRegion:
    """Crop the face as the largest hole-filled skin blob.

    Accepts RGB, or HSI when enhancement already produced it. The returned
    mask keeps only the chosen component, so other skin blobs that poke into
    the box are excluded downstream.
    """
    if img.colorspace is Colorspace.RGB:
        hsi = rgb_to_hsi(img)
    elif img.colorspace is Colorspace.HSI:
        hsi = img
    else:
        raise ColorspaceError(f"segment_face expects RGB or HSI, got {img.colorspace.value}")
    filled = fill_holes(skin_mask(hsi))
    labels, best = _largest_label(filled)
    rows, cols = ndimage.find_objects(labels)[best - 1]
    bbox = BBox(cols.start, rows.start, cols.stop - cols.start, rows.stop - rows.start)
    mask = labels[rows, cols] == best
    return FaceRegion(bbox, img.crop(*bbox), mask)
