"""Raster container, color conversions, histogram equalization and PDFs.

Every stage of the pipeline exchanges :class:`PlanarImage` values: an
immutable stack of equally sized float planes tagged with a colorspace.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ColorspaceError, EmptyInputError, ShapeError

__all__ = [
    "Colorspace",
    "PlanarImage",
    "PdfVector",
    "CHANNEL_SPACE",
    "rgb_to_hsi",
    "rgb_to_ycbcr",
    "rgb_to_gray",
    "ycbcr_to_rgb",
    "replace_intensity",
    "convert",
    "channel_plane",
    "quantize",
    "ghe",
    "pdf",
    "read_image",
    "write_image",
]


class Colorspace(str, enum.Enum):
    RGB = "RGB"
    HSI = "HSI"
    YCBCR = "YCbCr"
    GRAY = "GRAY"
    LABELS = "LABELS"

    @property
    def channels(self) -> tuple[str, ...]:
        return _CHANNELS[self]


_CHANNELS = {
    Colorspace.RGB: ("R", "G", "B"),
    Colorspace.HSI: ("H", "S", "I"),
    Colorspace.YCBCR: ("Y", "Cb", "Cr"),
    Colorspace.GRAY: ("GRAY",),
    Colorspace.LABELS: ("LABELS",),
}

# Which colorspace a named channel is read from.
CHANNEL_SPACE = {
    name: space
    for space in (Colorspace.RGB, Colorspace.HSI, Colorspace.YCBCR, Colorspace.GRAY)
    for name in _CHANNELS[space]
}


@dataclass(frozen=True, eq=False)
class PlanarImage:
    """A ``height x width`` raster holding one float plane per channel.

    Planes are copied to float64 and made read-only on construction.
    """

    colorspace: Colorspace
    planes: tuple[np.ndarray, ...]

    def __post_init__(self):
        space = Colorspace(self.colorspace)
        planes = []
        for p in self.planes:
            arr = np.array(p, dtype=np.float64)
            arr.setflags(write=False)
            planes.append(arr)
        if len(planes) != len(space.channels):
            raise ShapeError(
                f"{space.value} image needs {len(space.channels)} planes, got {len(planes)}"
            )
        shapes = {p.shape for p in planes}
        if len(shapes) != 1 or planes[0].ndim != 2:
            raise ShapeError(f"planes must be 2D and equally sized, got {sorted(shapes)}")
        object.__setattr__(self, "colorspace", space)
        object.__setattr__(self, "planes", tuple(planes))

    @classmethod
    def from_array(cls, array: np.ndarray, colorspace=Colorspace.RGB) -> "PlanarImage":
        """Build from an ``(H, W)`` or ``(H, W, C)`` array."""
        array = np.asarray(array)
        if array.ndim == 2:
            return cls(colorspace, (array,))
        return cls(colorspace, tuple(array[..., c] for c in range(array.shape[-1])))

    @property
    def height(self) -> int:
        return self.planes[0].shape[0]

    @property
    def width(self) -> int:
        return self.planes[0].shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.planes[0].shape

    def plane(self, channel: str) -> np.ndarray:
        try:
            return self.planes[self.colorspace.channels.index(channel)]
        except ValueError:
            raise ColorspaceError(
                f"channel {channel!r} not in {self.colorspace.value} image"
            ) from None

    def to_array(self) -> np.ndarray:
        return np.stack(self.planes, axis=-1)

    def replace(self, channel: str, plane: np.ndarray) -> "PlanarImage":
        idx = self.colorspace.channels.index(channel)
        planes = list(self.planes)
        planes[idx] = plane
        return PlanarImage(self.colorspace, tuple(planes))

    def crop(self, x: int, y: int, w: int, h: int) -> "PlanarImage":
        return PlanarImage(self.colorspace, tuple(p[y:y + h, x:x + w] for p in self.planes))


@dataclass(frozen=True, eq=False)
class PdfVector:
    bins: int
    values: np.ndarray

    def coarsen(self, bins: int) -> "PdfVector":
        """Block-sum to a smaller bin count that divides the current one."""
        if self.bins % bins:
            raise ShapeError(f"cannot coarsen {self.bins} bins to {bins}")
        return PdfVector(bins, self.values.reshape(bins, -1).sum(axis=1))


def _require(img: PlanarImage, space: Colorspace) -> None:
    if img.colorspace is not space:
        raise ColorspaceError(f"expected {space.value} image, got {img.colorspace.value}")


def rgb_to_hsi(img: PlanarImage) -> PlanarImage:
    """Arccos-form RGB to HSI conversion.

    Hue is the angle divided by 2*pi, so ``H`` lies in [0, 1); ``S`` lies in
    [0, 1] and ``I`` keeps the 0-255 scale. Achromatic pixels get ``H = 0``
    and black pixels get ``S = 0``.
    """
    _require(img, Colorspace.RGB)
    r, g, b = img.planes
    total = r + g + b
    intensity = total / 3.0
    with np.errstate(invalid="ignore", divide="ignore"):
        sat = np.where(total > 0, 1.0 - 3.0 * np.minimum(np.minimum(r, g), b) / total, 0.0)
        num = 0.5 * ((r - g) + (r - b))
        den = np.sqrt((r - g) ** 2 + (r - b) * (g - b))
        theta = np.arccos(np.clip(np.where(den > 0, num / den, 1.0), -1.0, 1.0))
    hue = np.where(b > g, 2.0 * np.pi - theta, theta) / (2.0 * np.pi)
    hue = np.where(den > 0, hue, 0.0)
    hue = np.where(hue >= 1.0, 0.0, hue)
    return PlanarImage(Colorspace.HSI, (hue, np.clip(sat, 0.0, 1.0), intensity))


# Full-range BT.601 (JFIF) coefficients.
_YCBCR = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_YCBCR_OFFSET = np.array([0.0, 128.0, 128.0])


def rgb_to_ycbcr(img: PlanarImage) -> PlanarImage:
    """Full-range BT.601 conversion; Cb and Cr are clipped into [0, 255]."""
    _require(img, Colorspace.RGB)
    rgb = img.to_array()
    ycc = rgb @ _YCBCR.T + _YCBCR_OFFSET
    return PlanarImage(Colorspace.YCBCR, tuple(np.clip(ycc[..., c], 0.0, 255.0) for c in range(3)))


def ycbcr_to_rgb(img: PlanarImage) -> PlanarImage:
    _require(img, Colorspace.YCBCR)
    ycc = img.to_array() - _YCBCR_OFFSET
    rgb = ycc @ np.linalg.inv(_YCBCR).T
    return PlanarImage(Colorspace.RGB, tuple(np.clip(rgb[..., c], 0.0, 255.0) for c in range(3)))


def replace_intensity(rgb: PlanarImage, intensity: np.ndarray) -> PlanarImage:
    """Rescale each RGB pixel so its HSI intensity becomes ``intensity``.

    Hue and saturation are ratios of the RGB components and stay unchanged
    wherever no component clips at 255. Black pixels stay black.
    """
    _require(rgb, Colorspace.RGB)
    current = sum(rgb.planes) / 3.0
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(current > 0, np.asarray(intensity) / current, 0.0)
    return PlanarImage(Colorspace.RGB, tuple(np.clip(p * scale, 0.0, 255.0) for p in rgb.planes))


def rgb_to_gray(img: PlanarImage) -> PlanarImage:
    """BT.601 luma as a single GRAY plane."""
    _require(img, Colorspace.RGB)
    return PlanarImage(Colorspace.GRAY, (rgb_to_ycbcr(img).planes[0],))


_CONVERTERS = {
    Colorspace.RGB: lambda img: img,
    Colorspace.HSI: rgb_to_hsi,
    Colorspace.YCBCR: rgb_to_ycbcr,
    Colorspace.GRAY: rgb_to_gray,
}


def convert(img: PlanarImage, space) -> PlanarImage:
    """Convert an RGB image to ``space`` (identity if already there)."""
    space = Colorspace(space)
    if img.colorspace is space:
        return img
    if space not in _CONVERTERS:
        raise ColorspaceError(f"no conversion to {space.value}")
    return _CONVERTERS[space](img)


def channel_plane(img: PlanarImage, channel: str) -> np.ndarray:
    """Fetch a named channel, converting from RGB when the image is RGB."""
    if channel in img.colorspace.channels:
        return img.plane(channel)
    if channel not in CHANNEL_SPACE:
        raise ColorspaceError(f"unknown channel {channel!r}")
    if img.colorspace is not Colorspace.RGB:
        raise ColorspaceError(
            f"channel {channel} cannot be derived from a {img.colorspace.value} image"
        )
    return convert(img, CHANNEL_SPACE[channel]).plane(channel)


def quantize(plane: np.ndarray) -> np.ndarray:
    """Round to the nearest 8-bit level."""
    return np.clip(np.rint(plane), 0, 255).astype(np.int64)


def ghe(plane: np.ndarray) -> np.ndarray:
    """Global histogram equalization: level ``v`` maps to ``floor(255 * CDF(v))``.

    The plane is quantized to 8-bit levels first. A constant plane maps to 255.
    """
    plane = np.asarray(plane)
    if plane.size == 0:
        raise EmptyInputError("cannot equalize an empty plane")
    levels = quantize(plane)
    cdf_counts = np.cumsum(np.bincount(levels.ravel(), minlength=256))
    lut = (255 * cdf_counts) // levels.size
    return lut[levels].astype(np.float64)


def pdf(plane: np.ndarray, bins: int = 256) -> PdfVector:
    """Normalized intensity histogram with ``bins`` equal bins over [0, 256)."""
    plane = np.asarray(plane)
    if plane.size == 0:
        raise EmptyInputError("cannot build a PDF of an empty plane")
    if bins < 2 or bins > 256:
        raise ValueError(f"bins must lie in [2, 256], got {bins}")
    idx = quantize(plane).ravel() * bins // 256
    counts = np.bincount(idx, minlength=bins)
    return PdfVector(bins, counts / counts.sum())


def read_image(path) -> PlanarImage:
    """Decode an 8-bit image file (PNG, BMP, ...) into an RGB PlanarImage."""
    with Image.open(path) as im:
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
    return PlanarImage.from_array(rgb, Colorspace.RGB)


def write_image(path, img: PlanarImage | np.ndarray) -> None:
    """Write an RGB/GRAY image or a 2D array as an 8-bit file.

    Boolean arrays are written as 0/255 masks.
    """
    if isinstance(img, PlanarImage):
        if img.colorspace not in (Colorspace.RGB, Colorspace.GRAY):
            raise ColorspaceError("only RGB or GRAY images can be written")
        arr = img.to_array()
        if arr.shape[-1] == 1:
            arr = arr[..., 0]
    else:
        arr = np.asarray(img)
        if arr.dtype == bool:
            arr = arr * 255.0
    Image.fromarray(quantize(arr).astype(np.uint8)).save(Path(path))
