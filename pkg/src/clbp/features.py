"""LBP label images and regional LBP probability signatures."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import IncompatibleError, ShapeError
from .imaging import PlanarImage, channel_plane

__all__ = [
    "NEIGHBOR_ORDER",
    "NEIGHBOR_OFFSETS",
    "CANONICAL_CHANNELS",
    "order_channels",
    "normalize_weights",
    "Signature",
    "FusedSignature",
    "lbp",
    "region_slices",
    "regional_histograms",
    "channel_signature",
    "fvf_signature",
]

# (dy, dx) of neighbor n = 0..7: top-left first, then clockwise.
NEIGHBOR_OFFSETS = ((-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1))
NEIGHBOR_ORDER = "tl-cw"

CANONICAL_CHANNELS = ("H", "S", "I", "Y", "Cb", "Cr", "GRAY")


def _channel_rank(ch: str) -> int:
    try:
        return CANONICAL_CHANNELS.index(ch)
    except ValueError:
        raise IncompatibleError(f"unknown channel {ch!r}") from None


def order_channels(channels: Iterable[str]) -> tuple[str, ...]:
    return tuple(sorted(channels, key=_channel_rank))


def normalize_weights(weights: Sequence[float]) -> np.ndarray:
    """Rescale nonnegative region weights so they sum to their count."""
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1 or np.any(w < 0) or not w.sum() > 0:
        raise ShapeError("region weights must be nonnegative and not all zero")
    return w * (w.size / w.sum())


@dataclass(frozen=True, eq=False)
class Signature:
    """Concatenated per-region LBP PDFs for one channel of one face.

    ``values`` has ``grid_rows * grid_cols * bins`` entries; region blocks are
    laid out row-major and each block sums to one.
    """

    channel: str
    grid_rows: int
    grid_cols: int
    bins: int
    values: np.ndarray
    region_weights: np.ndarray = field(default=None)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        m = self.grid_rows * self.grid_cols
        if values.shape != (m * self.bins,):
            raise ShapeError(f"signature needs {m * self.bins} values, got {values.shape}")
        weights = np.ones(m) if self.region_weights is None else np.asarray(self.region_weights, dtype=np.float64)
        if weights.shape != (m,) or np.any(weights < 0) or abs(weights.sum() - m) > 1e-9 * m:
            raise ShapeError(f"region_weights must be {m} nonnegative values summing to {m}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "region_weights", weights)

    @property
    def regions(self) -> int:
        return self.grid_rows * self.grid_cols

    @property
    def grid(self) -> tuple[int, int]:
        return self.grid_rows, self.grid_cols

    def blocks(self) -> np.ndarray:
        return self.values.reshape(self.regions, self.bins)

    def coarsen(self, bins: int) -> "Signature":
        """Merge adjacent bins; exact because label binning is ``label * bins // 256``."""
        if self.bins % bins:
            raise ShapeError(f"cannot coarsen {self.bins} bins to {bins}")
        merged = self.blocks().reshape(self.regions, bins, -1).sum(axis=2).ravel()
        return Signature(self.channel, self.grid_rows, self.grid_cols, bins, merged, self.region_weights)


@dataclass(frozen=True, eq=False)
class FusedSignature:
    channels: tuple[str, ...]
    bins: int
    values: np.ndarray
    region_weights: np.ndarray


def lbp(plane: np.ndarray) -> np.ndarray:
    """8-neighbor LBP codes of every interior pixel.

    Bit ``n`` is set when neighbor ``n`` is ``>=`` the center. The result is
    two pixels smaller than the input in each dimension.
    """
    p = np.asarray(plane)
    if p.ndim != 2 or p.shape[0] < 3 or p.shape[1] < 3:
        raise ShapeError(f"lbp needs a plane of at least 3x3, got {p.shape}")
    h, w = p.shape
    center = p[1:h - 1, 1:w - 1]
    codes = np.zeros(center.shape, dtype=np.int64)
    for n, (dy, dx) in enumerate(NEIGHBOR_OFFSETS):
        neighbor = p[1 + dy:h - 1 + dy, 1 + dx:w - 1 + dx]
        codes |= (neighbor >= center).astype(np.int64) << n
    return codes


def region_slices(shape: tuple[int, int], grid_rows: int, grid_cols: int) -> list[tuple[slice, slice]]:
    """Row-major tiling; the last row/column of regions absorbs any remainder."""
    h, w = shape
    if grid_rows < 1 or grid_cols < 1 or grid_rows > h or grid_cols > w:
        raise ShapeError(f"grid {grid_rows}x{grid_cols} does not fit a {h}x{w} label image")
    rh, rw = h // grid_rows, w // grid_cols
    row_edges = [i * rh for i in range(grid_rows)] + [h]
    col_edges = [j * rw for j in range(grid_cols)] + [w]
    return [
        (slice(row_edges[i], row_edges[i + 1]), slice(col_edges[j], col_edges[j + 1]))
        for i in range(grid_rows)
        for j in range(grid_cols)
    ]


def regional_histograms(labels: np.ndarray, grid_rows: int = 4, grid_cols: int = 4,
                        bins: int = 256, mask: np.ndarray | None = None) -> np.ndarray:
    """Count LBP labels per region; returns an ``(m, bins)`` integer array.

    Labels fall into bin ``label * bins // 256``. Pixels where ``mask`` is
    False are not counted.
    """
    labels = np.asarray(labels)
    if not 1 <= bins <= 256:
        raise ValueError(f"bins must be in [1, 256], got {bins}")
    slices = region_slices(labels.shape, grid_rows, grid_cols)
    binned = labels * bins // 256
    keep = np.ones(labels.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    out = np.zeros((len(slices), bins), dtype=np.int64)
    for j, (rs, cs) in enumerate(slices):
        out[j] = np.bincount(binned[rs, cs][keep[rs, cs]], minlength=bins)
    return out


def channel_signature(face, channel: str, grid: tuple[int, int] = (4, 4), bins: int = 256,
                      region_weights: Sequence[float] | None = None) -> Signature:
    """Regional LBP signature of one channel of a segmented face.

    ``face`` is a :class:`~clbp.segmentation.FaceRegion` (its mask excludes
    non-skin pixels) or a bare :class:`~clbp.imaging.PlanarImage`. Regions
    with nothing to count get a uniform PDF.
    """
    if isinstance(face, PlanarImage):
        crop, mask = face, None
    else:
        crop, mask = face.crop, face.mask
    plane = channel_plane(crop, channel)
    rows, cols = grid
    if plane.shape[0] < 3 or plane.shape[1] < 3 or plane.shape[0] - 2 < rows or plane.shape[1] - 2 < cols:
        raise ShapeError(f"face crop {plane.shape} too small for a {rows}x{cols} grid")
    labels = lbp(plane)
    inner = None if mask is None else np.asarray(mask, dtype=bool)[1:-1, 1:-1]
    counts = regional_histograms(labels, rows, cols, bins, inner).astype(np.float64)
    totals = counts.sum(axis=1, keepdims=True)
    pdfs = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / bins)
    return Signature(channel, rows, cols, bins, pdfs.ravel(), region_weights)


def fvf_signature(sigs: Sequence[Signature]) -> FusedSignature:
    """Concatenate per-channel signatures in canonical channel order."""
    if not sigs:
        raise ValueError("nothing to fuse")
    first = sigs[0]
    channels = [s.channel for s in sigs]
    if len(set(channels)) != len(channels):
        raise IncompatibleError(f"duplicate channels in {channels}")
    for s in sigs[1:]:
        if s.grid != first.grid or s.bins != first.bins:
            raise IncompatibleError("signatures differ in grid or bins")
    ordered = sorted(sigs, key=lambda s: _channel_rank(s.channel))
    return FusedSignature(
        tuple(s.channel for s in ordered),
        first.bins,
        np.concatenate([s.values for s in ordered]),
        np.concatenate([s.region_weights for s in ordered]),
    )
