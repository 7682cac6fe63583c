"""Signature distances and nearest-subject ranking."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import DegenerateInputError, EmptyInputError, IncompatibleError, ShapeError
from .features import FusedSignature, Signature, fvf_signature

__all__ = [
    "EPSILON",
    "Metric",
    "DistanceTable",
    "RankedResult",
    "kld",
    "metric_distance",
    "signature_distance",
    "distance_table",
    "nearest_subject",
]

EPSILON = 1e-10


class Metric(str, enum.Enum):
    KLD = "KLD"
    L1 = "L1"
    L2 = "L2"
    XCORR = "XCORR"

    @classmethod
    def parse(cls, value) -> "Metric":
        return value if isinstance(value, cls) else cls(str(value).strip().upper())


def _floor(block: np.ndarray, eps: float) -> np.ndarray:
    f = np.maximum(block, eps)
    return f / f.sum(axis=-1, keepdims=True)


def _kl(p: np.ndarray, q_floored: np.ndarray) -> np.ndarray:
    """Row-wise D(p || q) with the 0 log 0 = 0 convention."""
    safe_p = np.where(p > 0, p, 1.0)
    return np.sum(np.where(p > 0, p * np.log(safe_p / q_floored), 0.0), axis=-1)


def kld(p, q, bins: int | None = None, weights=None, eps: float = EPSILON) -> float:
    """Symmetrized Kullback-Leibler distance between blockwise PDFs.

    For each ``bins``-long block (the whole vector when ``bins`` is None)
    computes ``D(p || q~) + D(q || p~)`` where ``p~``/``q~`` are floored at
    ``eps`` and renormalized. Blocks are combined by a weighted sum. Blocks
    that are bit-identical contribute exactly zero.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise ShapeError(f"kld needs equal-length vectors, got {p.shape} and {q.shape}")
    bins = p.size if bins is None else bins
    if p.size % bins:
        raise ShapeError(f"length {p.size} is not a multiple of block size {bins}")
    pb = p.reshape(-1, bins)
    qb = q.reshape(-1, bins)
    w = np.ones(pb.shape[0]) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (pb.shape[0],):
        raise ShapeError(f"expected {pb.shape[0]} block weights, got {w.shape}")
    per_block = _kl(pb, _floor(qb, eps)) + _kl(qb, _floor(pb, eps))
    per_block = np.where(np.all(pb == qb, axis=1), 0.0, np.maximum(per_block, 0.0))
    return float(np.dot(w, per_block))


def metric_distance(p, q, metric=Metric.KLD, bins: int | None = None, weights=None) -> float:
    """Distance under one of the four comparison metrics.

    XCORR is ``1 - r`` with ``r`` the centered normalized cross-correlation.
    ``bins`` and ``weights`` only affect KLD.
    """
    metric = Metric.parse(metric)
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise ShapeError(f"length mismatch: {p.shape} vs {q.shape}")
    if metric is Metric.KLD:
        return kld(p, q, bins, weights)
    d = p - q
    if metric is Metric.L1:
        return float(np.sum(np.abs(d)))
    if metric is Metric.L2:
        return float(np.sqrt(np.sum(d * d)))
    pc = p - p.mean()
    qc = q - q.mean()
    denom = np.sqrt(np.sum(pc * pc) * np.sum(qc * qc))
    if denom == 0.0:
        raise DegenerateInputError("cross-correlation undefined for a zero-variance vector")
    if np.array_equal(p, q):
        return 0.0
    return float(max(0.0, 1.0 - np.sum(pc * qc) / denom))


def signature_distance(a: Signature | FusedSignature, b: Signature | FusedSignature,
                       metric=Metric.KLD) -> float:
    """Distance between two signatures, using the first one's region weights."""
    if a.bins != b.bins or a.values.shape != b.values.shape:
        raise IncompatibleError("signatures differ in bins or length")
    return metric_distance(a.values, b.values, metric, a.bins, a.region_weights)


@dataclass
class DistanceTable:
    probe_id: str
    metric: Metric
    entries: dict[tuple[str, str], float]

    @property
    def channels(self) -> list[str]:
        return sorted({ch for _, ch in self.entries})

    @property
    def subjects(self) -> list[str]:
        return sorted({s for s, _ in self.entries})

    def channel(self, ch: str) -> dict[str, float]:
        return {s: d for (s, c), d in self.entries.items() if c == ch}


@dataclass
class RankedResult:
    ranking: list[tuple[str, float]]

    @property
    def decision(self) -> str:
        return self.ranking[0][0]


def _rank(scores: Mapping[str, float], k: int | None) -> RankedResult:
    ranking = sorted(scores.items(), key=lambda item: (item[1], item[0]))
    return RankedResult(ranking if k is None else ranking[:k])


def _check_compatible(probe, gallery) -> None:
    meta = gallery.meta
    if probe.bins != meta.bins:
        raise IncompatibleError(f"probe has {probe.bins} bins, gallery {meta.bins}")
    if isinstance(probe, Signature):
        if probe.grid != (meta.grid_rows, meta.grid_cols):
            raise IncompatibleError(f"probe grid {probe.grid} differs from gallery grid")
        if probe.channel not in meta.channels:
            raise IncompatibleError(f"gallery has no channel {probe.channel}")
    else:
        missing = set(probe.channels) - set(meta.channels)
        if missing:
            raise IncompatibleError(f"gallery lacks channels {sorted(missing)}")


def _subject_distance(probe, gallery, subject: str, metric: Metric) -> float:
    if isinstance(probe, Signature):
        samples = gallery.signatures(subject, probe.channel)
    else:
        samples = [fvf_signature([s[ch] for ch in probe.channels]) for s in gallery.samples(subject)]
    return min(signature_distance(probe, s, metric) for s in samples)


def nearest_subject(probe: Signature | FusedSignature, gallery, metric=Metric.KLD,
                    k: int | None = None) -> RankedResult:
    """Rank enrolled subjects by their closest sample to ``probe``.

    Ties are ordered by subject id.
    """
    if not gallery.subject_ids:
        raise EmptyInputError("gallery is empty")
    _check_compatible(probe, gallery)
    metric = Metric.parse(metric)
    scores = {s: _subject_distance(probe, gallery, s, metric) for s in gallery.subject_ids}
    return _rank(scores, k)


def distance_table(probe: Mapping[str, Signature], gallery, metric=Metric.KLD,
                   probe_id: str = "probe", channels: Sequence[str] | None = None) -> DistanceTable:
    """Per-(subject, channel) nearest-sample distances for decision fusion."""
    if not gallery.subject_ids:
        raise EmptyInputError("gallery is empty")
    metric = Metric.parse(metric)
    channels = list(probe) if channels is None else list(channels)
    entries = {}
    for ch in channels:
        _check_compatible(probe[ch], gallery)
        for s in gallery.subject_ids:
            entries[(s, ch)] = _subject_distance(probe[ch], gallery, s, metric)
    return DistanceTable(probe_id, metric, entries)
