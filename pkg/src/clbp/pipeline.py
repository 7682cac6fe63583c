"""End-to-end flow: dataset ingestion, feature extraction, enrollment and
identification."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image, UnidentifiedImageError

from .config import Config
from .errors import DatasetError, EmptyInputError, NoSkinRegionError
from .features import NEIGHBOR_ORDER, Signature, channel_signature, fvf_signature
from .fusion import Rule, channel_decisions, fuse, normalize_scores
from .gallery import Gallery, GalleryMeta
from .illumination import INTENSITY_PLANES, enhance_image
from .imaging import CHANNEL_SPACE, Colorspace, PlanarImage, convert, quantize, read_image
from .matching import Metric, RankedResult, distance_table, nearest_subject
from .segmentation import FaceRegion, segment_face

__all__ = [
    "DatasetIndex",
    "ingest",
    "extract_features",
    "extract_dataset",
    "gallery_meta",
    "enroll",
    "enroll_features",
    "Identification",
    "identify",
]

log = logging.getLogger(__name__)


@dataclass
class DatasetIndex:
    root: Path
    subjects: list[tuple[str, list[Path]]]
    skipped: list[tuple[Path, str]] = field(default_factory=list)

    @property
    def warnings(self) -> int:
        return len(self.skipped)


def _decodable(path: Path) -> str | None:
    try:
        with Image.open(path) as im:
            im.verify()
    except (UnidentifiedImageError, OSError, SyntaxError, ValueError) as exc:
        return str(exc) or type(exc).__name__
    return None


def ingest(root) -> DatasetIndex:
    """Index ``root/<subject>/<image>``; undecodable files are skipped and counted."""
    root = Path(root)
    if not root.is_dir():
        raise DatasetError(f"{root}: not a directory")
    subjects, skipped = [], []
    for sub in sorted(p for p in root.iterdir() if p.is_dir()):
        paths = []
        for f in sorted(p for p in sub.iterdir() if p.is_file()):
            problem = _decodable(f)
            if problem:
                log.warning("skipping %s: %s", f, problem)
                skipped.append((f, problem))
            else:
                paths.append(f)
        if paths:
            subjects.append((sub.name, paths))
        else:
            log.warning("subject %s has no readable images", sub.name)
    if not subjects:
        raise DatasetError(f"{root}: no subject directories with images")
    return DatasetIndex(root, subjects, skipped)


def _working_images(rgb: PlanarImage, config: Config) -> tuple[PlanarImage, dict[Colorspace, PlanarImage]]:
    """Segmentation source and one image per colorspace the channels need.

    Planes of the enhancement space come from the enhanced image; other
    colorspaces are converted from the unenhanced input, except that an
    enhanced RGB image feeds every space.
    """
    space = Colorspace(config.enhancement_space)
    if config.enhancement == "NONE":
        enhanced = convert(rgb, space)
    else:
        enhanced = enhance_image(rgb, space, config.enhancement)
        # back to 8-bit levels, as a stored enhanced image would be; keeps
        # original intensity ties from turning into rounding noise under LBP
        for ch in INTENSITY_PLANES[space]:
            enhanced = enhanced.replace(ch, quantize(enhanced.plane(ch)))
    base = enhanced if space is Colorspace.RGB else rgb
    working = {}
    for ch in config.channels:
        target = CHANNEL_SPACE[ch]
        if target not in working:
            working[target] = enhanced if target is space else convert(base, target)
    seg_source = enhanced if space in (Colorspace.RGB, Colorspace.HSI) else rgb
    return seg_source, working


def extract_features(rgb: PlanarImage, config: Config | None = None) -> dict[str, Signature]:
    """Enhance, segment and build one signature per configured channel.

    Raises NoSkinRegionError when the image holds no skin-colored blob.
    """
    config = config or Config()
    seg_source, working = _working_images(rgb, config)
    face = segment_face(seg_source)
    out = {}
    for ch in config.channels:
        crop = working[CHANNEL_SPACE[ch]].crop(*face.bbox)
        out[ch] = channel_signature(FaceRegion(face.bbox, crop, face.mask), ch, config.grid,
                                    config.bins, config.region_weights)
    return out


def extract_dataset(index: DatasetIndex, config: Config | None = None) -> dict[str, list[dict[str, Signature]]]:
    """Signatures for every indexed image; images without skin are logged and dropped."""
    config = config or Config()
    features = {}
    for subject, paths in index.subjects:
        samples = []
        for path in paths:
            try:
                samples.append(extract_features(read_image(path), config))
            except NoSkinRegionError:
                log.warning("no skin region in %s; skipped", path)
        if not samples:
            raise DatasetError(f"subject {subject!r}: no image produced a face")
        features[subject] = samples
    return features


def gallery_meta(config: Config) -> GalleryMeta:
    return GalleryMeta(
        grid_rows=config.grid[0],
        grid_cols=config.grid[1],
        bins=config.bins,
        channels=config.channels,
        neighbor_order=NEIGHBOR_ORDER,
        metric=config.metric,
        enhancement=config.enhancement,
        enhancement_space=config.enhancement_space,
        region_weights=config.region_weights,
    )


def enroll_features(features: Mapping[str, list[dict[str, Signature]]], config: Config | None = None) -> Gallery:
    config = config or Config()
    g = Gallery(gallery_meta(config))
    for subject in sorted(features):
        for sample in features[subject]:
            g.add_sample(subject, sample)
    return g


def enroll(index: DatasetIndex, config: Config | None = None) -> Gallery:
    """Build a gallery from every usable image of every subject."""
    return enroll_features(extract_dataset(index, config), config)


def config_from_meta(meta: GalleryMeta, fusion: str = "fvf") -> Config:
    return Config(
        channels=meta.channels,
        grid=meta.grid,
        bins=meta.bins,
        metric=meta.metric,
        fusion=fusion,
        enhancement=meta.enhancement,
        enhancement_space=meta.enhancement_space,
        region_weights=meta.region_weights,
    )


@dataclass
class Identification:
    decision: str
    rule: str
    ranking: list[tuple[str, float]]
    channel_decisions: dict[str, str] = field(default_factory=dict)


def identify(probe: PlanarImage | Mapping[str, Signature], gallery: Gallery, fusion="fvf",
             top: int | None = None) -> Identification:
    """Identify a probe image (or precomputed signatures) against ``gallery``.

    The ranking is by FVF distance for ``fvf``, by fused normalized score for
    ``sum``/``median``, and by summed normalized score for ``mv``.
    """
    if not gallery.subject_ids:
        raise EmptyInputError("gallery is empty")
    rule = Rule.parse(fusion)
    sigs = probe if isinstance(probe, Mapping) else extract_features(probe, config_from_meta(gallery.meta))
    metric = Metric.parse(gallery.meta.metric)
    if rule is Rule.FVF:
        ranked: RankedResult = nearest_subject(
            fvf_signature([sigs[ch] for ch in gallery.meta.channels]), gallery, metric, top)
        return Identification(ranked.decision, rule.value, ranked.ranking)
    table = distance_table(sigs, gallery, metric, channels=gallery.meta.channels)
    scores = normalize_scores(table)
    reduce = np.median if rule is Rule.MEDIAN else np.sum
    combined = {s: float(reduce([scores[ch][s] for ch in scores])) for s in table.subjects}
    ranking = sorted(combined.items(), key=lambda item: (item[1], item[0]))
    return Identification(fuse(table, rule), rule.value, ranking[:top] if top else ranking,
                          channel_decisions(scores))
