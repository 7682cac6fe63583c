"""Wavelet-domain illumination equalization.

The LL band of a one-level orthonormal Haar decomposition carries the
illumination of a plane. It is rescaled by the ratio between the largest
singular value of a histogram-equalized reference's LL band and that of the
input's LL band, then the plane is resynthesized with the untouched detail
bands.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ColorspaceError, DegenerateInputError, ShapeError
from .imaging import Colorspace, PlanarImage, convert, ghe

__all__ = [
    "Method",
    "SubbandSet",
    "CorrectionCoefficient",
    "Enhancement",
    "dwt2",
    "idwt2",
    "spectral_norm",
    "zeta_svd",
    "zeta_norm",
    "enhance_plane",
    "enhance_plane_detailed",
    "enhance_image",
]

_SQRT2 = np.sqrt(2.0)


class Method(str, enum.Enum):
    SVD_RATIO = "SVD_RATIO"
    NORM_RATIO = "NORM_RATIO"

    @classmethod
    def parse(cls, value) -> "Method":
        if isinstance(value, cls):
            return value
        key = str(value).strip().upper()
        aliases = {"SVD": cls.SVD_RATIO, "NORM": cls.NORM_RATIO}
        return aliases.get(key) or cls(key)


@dataclass(frozen=True, eq=False)
class SubbandSet:
    """One-level decomposition of a plane.

    ``lh`` is low-pass along rows and high-pass along columns, ``hl`` the
    reverse. ``original_shape`` is the ``(height, width)`` before padding.
    """

    ll: np.ndarray
    lh: np.ndarray
    hl: np.ndarray
    hh: np.ndarray
    original_shape: tuple[int, int]

    def with_ll(self, ll: np.ndarray) -> "SubbandSet":
        return SubbandSet(ll, self.lh, self.hl, self.hh, self.original_shape)


@dataclass(frozen=True)
class CorrectionCoefficient:
    zeta: float
    method: Method

    def __post_init__(self):
        if not (np.isfinite(self.zeta) and self.zeta > 0):
            raise DegenerateInputError(f"correction coefficient must be finite and > 0, got {self.zeta}")


def dwt2(plane: np.ndarray) -> SubbandSet:
    """Orthonormal Haar analysis, rows first then columns.

    Odd dimensions are padded by replicating the last row/column.
    """
    a = np.asarray(plane, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 2 or a.shape[1] < 2:
        raise ShapeError(f"dwt2 needs a 2D plane of at least 2x2, got {a.shape}")
    h, w = a.shape
    a = np.pad(a, ((0, h % 2), (0, w % 2)), mode="edge")
    # along rows: pair horizontally adjacent samples
    lo = (a[:, 0::2] + a[:, 1::2]) / _SQRT2
    hi = (a[:, 0::2] - a[:, 1::2]) / _SQRT2
    # along columns
    ll = (lo[0::2] + lo[1::2]) / _SQRT2
    lh = (lo[0::2] - lo[1::2]) / _SQRT2
    hl = (hi[0::2] + hi[1::2]) / _SQRT2
    hh = (hi[0::2] - hi[1::2]) / _SQRT2
    return SubbandSet(ll, lh, hl, hh, (h, w))


def idwt2(sub: SubbandSet) -> np.ndarray:
    """Haar synthesis; the result is cropped back to ``sub.original_shape``."""
    shapes = {np.shape(b) for b in (sub.ll, sub.lh, sub.hl, sub.hh)}
    if len(shapes) != 1:
        raise ShapeError(f"sub-band shapes differ: {sorted(shapes)}")
    bh, bw = shapes.pop()
    h, w = sub.original_shape
    if (bh, bw) != ((h + 1) // 2, (w + 1) // 2):
        raise ShapeError(f"sub-bands {bh}x{bw} do not match original {h}x{w}")
    lo = np.empty((2 * bh, bw))
    hi = np.empty((2 * bh, bw))
    lo[0::2] = (sub.ll + sub.lh) / _SQRT2
    lo[1::2] = (sub.ll - sub.lh) / _SQRT2
    hi[0::2] = (sub.hl + sub.hh) / _SQRT2
    hi[1::2] = (sub.hl - sub.hh) / _SQRT2
    out = np.empty((2 * bh, 2 * bw))
    out[:, 0::2] = (lo + hi) / _SQRT2
    out[:, 1::2] = (lo - hi) / _SQRT2
    return out[:h, :w]


def spectral_norm(a: np.ndarray, rtol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on ``a.T @ a``."""
    a = np.asarray(a, dtype=np.float64)
    if not np.any(a):
        return 0.0
    ata = a.T @ a
    # Start from the Gram column of the heaviest input column: it always has a
    # nonzero component along the top right-singular vector in practice.
    x = ata[:, np.argmax(np.einsum("ij,ij->j", a, a))].copy()
    x /= np.linalg.norm(x)
    sigma = np.linalg.norm(a @ x)
    for _ in range(max_iter):
        y = ata @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        x = y / ny
        new_sigma = np.linalg.norm(a @ x)
        if abs(new_sigma - sigma) <= rtol * new_sigma:
            sigma = new_sigma
            break
        sigma = new_sigma
    return float(sigma)


def _check_pair(ll_a, ll_ref):
    ll_a = np.asarray(ll_a, dtype=np.float64)
    ll_ref = np.asarray(ll_ref, dtype=np.float64)
    if not np.any(ll_a):
        raise DegenerateInputError("input LL band is all zero; correction ratio undefined")
    if not np.any(ll_ref):
        raise DegenerateInputError("reference LL band is all zero")
    return ll_a, ll_ref


def zeta_svd(ll_a, ll_ref) -> CorrectionCoefficient:
    """Ratio of the largest singular values (reference over input)."""
    ll_a, ll_ref = _check_pair(ll_a, ll_ref)
    s_a = np.linalg.svd(ll_a, compute_uv=False)[0]
    s_ref = np.linalg.svd(ll_ref, compute_uv=False)[0]
    return CorrectionCoefficient(float(s_ref / s_a), Method.SVD_RATIO)


def zeta_norm(ll_a, ll_ref) -> CorrectionCoefficient:
    """Same ratio through spectral norms, avoiding a full SVD."""
    ll_a, ll_ref = _check_pair(ll_a, ll_ref)
    return CorrectionCoefficient(spectral_norm(ll_ref) / spectral_norm(ll_a), Method.NORM_RATIO)


_ZETA = {Method.SVD_RATIO: zeta_svd, Method.NORM_RATIO: zeta_norm}


@dataclass(frozen=True, eq=False)
class Enhancement:
    output: np.ndarray      # clamped to [0, 255]
    unclamped: np.ndarray
    zeta: CorrectionCoefficient


def enhance_plane_detailed(plane: np.ndarray, method=Method.NORM_RATIO) -> Enhancement:
    plane = np.asarray(plane, dtype=np.float64)
    method = Method.parse(method)
    sub = dwt2(plane)
    ref = dwt2(ghe(plane))
    zeta = _ZETA[method](sub.ll, ref.ll)
    raw = idwt2(sub.with_ll(zeta.zeta * sub.ll))
    return Enhancement(np.clip(raw, 0.0, 255.0), raw, zeta)


def enhance_plane(plane: np.ndarray, method=Method.NORM_RATIO) -> np.ndarray:
    """Equalize the illumination of one 8-bit-range plane."""
    return enhance_plane_detailed(plane, method).output


# Planes carrying intensity in each supported working space.
INTENSITY_PLANES = {
    Colorspace.HSI: ("I",),
    Colorspace.YCBCR: ("Y",),
    Colorspace.RGB: ("R", "G", "B"),
    Colorspace.GRAY: ("GRAY",),
}


def enhance_image(img: PlanarImage, colorspace=Colorspace.HSI, method=Method.NORM_RATIO) -> PlanarImage:
    """Convert an RGB image to ``colorspace`` and equalize its intensity planes.

    Chromatic planes (H, S or Cb, Cr) pass through untouched.
    """
    if img.colorspace is not Colorspace.RGB:
        raise ColorspaceError(f"enhance_image expects RGB input, got {img.colorspace.value}")
    try:
        space = Colorspace(colorspace)
        targets = INTENSITY_PLANES[space]
    except (ValueError, KeyError):
        raise ColorspaceError(f"unsupported enhancement colorspace {colorspace!r}") from None
    out = convert(img, space)
    for ch in targets:
        out = out.replace(ch, enhance_plane(out.plane(ch), method))
    return out
