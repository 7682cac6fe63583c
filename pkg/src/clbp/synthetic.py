"""Seeded synthetic face-like dataset for regression runs and demos.

Each subject is a skin-toned oval carrying its own smooth intensity texture
and a weak chroma texture, pasted on a non-skin (green/teal) background.
Samples of one subject differ by global gain/bias, a few pixels of
translation and sensor noise.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from scipy import ndimage

from .imaging import Colorspace, PlanarImage, write_image

__all__ = ["make_subject_textures", "render_sample", "make_dataset", "write_dataset"]

IMAGE_SHAPE = (72, 60)
OVAL_AXES = (28, 21)  # semi-axes (rows, cols) of the largest oval
MAX_SHIFT = 2


def _smooth_field(rng: np.random.Generator, shape, sigma: float) -> np.ndarray:
    f = ndimage.gaussian_filter(rng.standard_normal(shape), sigma, mode="wrap")
    return f / np.abs(f).max()


def make_subject_textures(rng: np.random.Generator) -> dict:
    """Per-subject appearance: skin tone, oval size, intensity and chroma fields."""
    ah = OVAL_AXES[0] - int(rng.integers(0, 5))
    aw = OVAL_AXES[1] - int(rng.integers(0, 4))
    shape = (2 * ah + 1, 2 * aw + 1)
    tone = np.array([205.0, 145.0, 115.0]) + rng.uniform(-12, 12, size=3)
    return {
        "axes": (ah, aw),
        "tone": tone,
        "luma": _smooth_field(rng, shape, 1.6),
        "chroma": np.stack([_smooth_field(rng, shape, 2.5) for _ in range(3)]),
    }


def render_sample(textures: dict, rng: np.random.Generator) -> PlanarImage:
    h, w = IMAGE_SHAPE
    ah, aw = textures["axes"]
    bg = np.array([70.0, 140.0, 115.0]) + rng.uniform(-15, 15, size=3)
    img = np.empty((h, w, 3))
    img[...] = bg
    img += ndimage.gaussian_filter(rng.standard_normal((h, w, 3)), (3, 3, 0)) * 20

    dy, dx = rng.integers(-MAX_SHIFT, MAX_SHIFT + 1, size=2)
    cy, cx = h // 2 + dy, w // 2 + dx
    yy, xx = np.mgrid[-ah:ah + 1, -aw:aw + 1]
    inside = (yy / ah) ** 2 + (xx / aw) ** 2 <= 1.0
    skin = textures["tone"] * (1.0 + 0.3 * textures["luma"])[..., None]
    skin = skin * (1.0 + 0.06 * np.moveaxis(textures["chroma"], 0, -1))
    region = img[cy - ah:cy + ah + 1, cx - aw:cx + aw + 1]
    region[inside] = skin[inside]

    gain = rng.uniform(0.65, 1.2)
    bias = rng.uniform(-15.0, 15.0)
    img = gain * img + bias + rng.normal(0.0, 2.0, size=img.shape)
    return PlanarImage.from_array(np.clip(np.rint(img), 0, 255), Colorspace.RGB)


def make_dataset(n_subjects: int = 10, n_samples: int = 8, seed: int = 0) -> dict[str, list[PlanarImage]]:
    """``{subject_id: [RGB images]}`` with ids ``s00``, ``s01``, ..."""
    rng = np.random.default_rng(seed)
    textures = [make_subject_textures(rng) for _ in range(n_subjects)]
    return {
        f"s{i:02d}": [render_sample(textures[i], rng) for _ in range(n_samples)]
        for i in range(n_subjects)
    }


def write_dataset(root, n_subjects: int = 10, n_samples: int = 8, seed: int = 0) -> Path:
    """Write the dataset as ``root/<subject>/<index>.png``."""
    root = Path(root)
    for subject, images in make_dataset(n_subjects, n_samples, seed).items():
        (root / subject).mkdir(parents=True, exist_ok=True)
        for i, img in enumerate(images):
            write_image(root / subject / f"{i:02d}.png", img)
    return root
