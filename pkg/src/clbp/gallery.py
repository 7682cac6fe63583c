"""Enrolled signature store and its text file format.

File layout::

    CLBP-GALLERY v1
    format_version=1
    grid=4x4
    bins=256
    channels=H,S,I
    neighbor_order=tl-cw
    metric=KLD
    enhancement=NORM_RATIO
    enhancement_space=HSI
    region_weights=1 1 1 ...
    records=<number of record lines>
    <blank line>
    subject<TAB>channel<TAB>sample_index<TAB>v0 v1 ... (17 significant digits)

Only ``grid``, ``bins``, ``channels`` and ``records`` are mandatory; the
rest fall back to the defaults shown. ``records`` lets the loader detect a
file cut at a line boundary.
"""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import GalleryFormatError, IncompatibleError
from .features import NEIGHBOR_ORDER, FusedSignature, Signature, fvf_signature, order_channels

__all__ = ["FORMAT_VERSION", "MAGIC", "GalleryMeta", "Gallery", "save_gallery", "load_gallery"]

FORMAT_VERSION = 1
MAGIC = "CLBP-GALLERY v1"
_MAGIC_RE = re.compile(r"^CLBP-GALLERY v(\d+)$")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class GalleryMeta:
    grid_rows: int = 4
    grid_cols: int = 4
    bins: int = 256
    channels: tuple[str, ...] = ("H", "S", "I")
    neighbor_order: str = NEIGHBOR_ORDER
    metric: str = "KLD"
    enhancement: str = "NORM_RATIO"
    enhancement_space: str = "HSI"
    region_weights: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "channels", order_channels(self.channels))
        m = self.grid_rows * self.grid_cols
        weights = (1.0,) * m if self.region_weights is None else tuple(float(w) for w in self.region_weights)
        if len(weights) != m:
            raise IncompatibleError(f"{len(weights)} region weights for {m} regions")
        if min(weights) < 0 or abs(sum(weights) - m) > 1e-9 * m:
            raise IncompatibleError(f"region weights must be nonnegative and sum to {m}")
        object.__setattr__(self, "region_weights", weights)

    @property
    def grid(self) -> tuple[int, int]:
        return self.grid_rows, self.grid_cols

    def header_lines(self, records: int) -> list[str]:
        return [
            MAGIC,
            f"format_version={FORMAT_VERSION}",
            f"grid={self.grid_rows}x{self.grid_cols}",
            f"bins={self.bins}",
            f"channels={','.join(self.channels)}",
            f"neighbor_order={self.neighbor_order}",
            f"metric={self.metric}",
            f"enhancement={self.enhancement}",
            f"enhancement_space={self.enhancement_space}",
            f"region_weights={' '.join(_fmt(w) for w in self.region_weights)}",
            f"records={records}",
        ]


@dataclass
class Gallery:
    """Per-subject, per-channel lists of signatures sharing one configuration.

    Sample ``i`` of a subject is the set of its channel signatures at index
    ``i``; every channel of a subject holds the same number of samples.
    """

    meta: GalleryMeta = field(default_factory=GalleryMeta)
    subjects: dict[str, dict[str, list[Signature]]] = field(default_factory=dict)

    @property
    def subject_ids(self) -> list[str]:
        return sorted(self.subjects)

    def add_sample(self, subject: str, sample: Mapping[str, Signature]) -> None:
        if not subject or any(c in subject for c in "\t\r\n"):
            raise ValueError(f"invalid subject id {subject!r}")
        if set(sample) != set(self.meta.channels):
            raise IncompatibleError(
                f"sample channels {sorted(sample)} differ from gallery channels {list(self.meta.channels)}"
            )
        for ch, sig in sample.items():
            if sig.channel != ch or sig.grid != self.meta.grid or sig.bins != self.meta.bins:
                raise IncompatibleError(f"signature for {ch} does not match gallery metadata")
        per_channel = self.subjects.setdefault(subject, {ch: [] for ch in self.meta.channels})
        for ch in self.meta.channels:
            per_channel[ch].append(sample[ch])

    def signatures(self, subject: str, channel: str) -> list[Signature]:
        return self.subjects[subject][channel]

    def samples(self, subject: str) -> list[dict[str, Signature]]:
        per_channel = self.subjects[subject]
        n = len(per_channel[self.meta.channels[0]])
        return [{ch: per_channel[ch][i] for ch in self.meta.channels} for i in range(n)]

    def fused(self, subject: str, channels=None) -> list[FusedSignature]:
        channels = self.meta.channels if channels is None else channels
        return [fvf_signature([s[ch] for ch in channels]) for s in self.samples(subject)]

    def sample_count(self) -> int:
        return sum(len(self.samples(s)) for s in self.subjects)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Gallery) or self.meta != other.meta:
            return False
        if self.subject_ids != other.subject_ids:
            return False
        for s in self.subject_ids:
            for ch in self.meta.channels:
                mine, theirs = self.subjects[s][ch], other.subjects[s][ch]
                if len(mine) != len(theirs):
                    return False
                if not all(np.array_equal(a.values, b.values) for a, b in zip(mine, theirs)):
                    return False
        return True


def _records(g: Gallery):
    for subject in g.subject_ids:
        for idx, sample in enumerate(g.samples(subject)):
            for ch in g.meta.channels:
                values = " ".join(_fmt(v) for v in sample[ch].values)
                yield f"{subject}\t{ch}\t{idx}\t{values}"


def save_gallery(g: Gallery, path) -> None:
    """Write atomically: a sibling temp file is renamed over ``path``."""
    path = Path(path)
    records = list(_records(g))
    text = "\n".join(g.meta.header_lines(len(records)) + [""] + records) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="\n")
    os.replace(tmp, path)


_REQUIRED = ("grid", "bins", "channels", "records")


def _parse_header(lines: list[str], path) -> tuple[GalleryMeta, int, int]:
    """Returns metadata, the declared record count and the index of the first record line."""
    if not lines:
        raise GalleryFormatError(f"{path}: empty file")
    m = _MAGIC_RE.match(lines[0])
    if not m:
        raise GalleryFormatError(f"{path}: line 1: bad magic {lines[0][:40]!r}")
    if int(m.group(1)) != FORMAT_VERSION:
        raise GalleryFormatError(f"{path}: unknown format version {m.group(1)}")
    kv = {}
    i = 1
    while i < len(lines) and lines[i] != "":
        key, sep, value = lines[i].partition("=")
        if not sep:
            raise GalleryFormatError(f"{path}: line {i + 1}: expected key=value")
        kv[key.strip()] = value.strip()
        i += 1
    if i == len(lines):
        raise GalleryFormatError(f"{path}: header not terminated by a blank line")
    missing = [k for k in _REQUIRED if k not in kv]
    if missing:
        raise GalleryFormatError(f"{path}: header lacks {', '.join(missing)}")
    if kv.get("format_version", str(FORMAT_VERSION)) != str(FORMAT_VERSION):
        raise GalleryFormatError(f"{path}: unknown format_version {kv['format_version']}")
    try:
        rows, cols = (int(v) for v in kv["grid"].lower().split("x"))
        weights = kv.get("region_weights")
        meta = GalleryMeta(
            grid_rows=rows,
            grid_cols=cols,
            bins=int(kv["bins"]),
            channels=tuple(c.strip() for c in kv["channels"].split(",") if c.strip()),
            neighbor_order=kv.get("neighbor_order", NEIGHBOR_ORDER),
            metric=kv.get("metric", "KLD"),
            enhancement=kv.get("enhancement", "NORM_RATIO"),
            enhancement_space=kv.get("enhancement_space", "HSI"),
            region_weights=None if weights is None else tuple(float(w) for w in weights.split()),
        )
        records = int(kv["records"])
    except (ValueError, IncompatibleError) as exc:
        raise GalleryFormatError(f"{path}: bad header value: {exc}") from None
    if meta.neighbor_order != NEIGHBOR_ORDER:
        raise GalleryFormatError(f"{path}: unsupported neighbor order {meta.neighbor_order!r}")
    return meta, records, i + 1


def load_gallery(path, expect: GalleryMeta | None = None) -> Gallery:
    """Parse a gallery file; any defect raises GalleryFormatError.

    When ``expect`` is given, differing metadata raises IncompatibleError.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise GalleryFormatError(f"{path}: cannot read: {exc}") from None
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise GalleryFormatError(f"{path}: byte {exc.start}: not UTF-8") from None
    if not text.endswith("\n"):
        raise GalleryFormatError(f"{path}: byte {len(raw)}: truncated (no final newline)")
    lines = text[:-1].split("\n")
    meta, declared, start = _parse_header(lines, path)
    if expect is not None and expect != meta:
        raise IncompatibleError(f"{path}: gallery metadata {meta} differs from expected {expect}")

    n_values = meta.grid_rows * meta.grid_cols * meta.bins
    collected: dict[str, dict[str, dict[int, Signature]]] = {}
    offset = sum(len(line.encode("utf-8")) + 1 for line in lines[:start])
    body = lines[start:]
    if len(body) != declared:
        raise GalleryFormatError(
            f"{path}: byte {len(raw)}: expected {declared} records, found {len(body)} (truncated?)"
        )
    for lineno, line in enumerate(body, start=start + 1):
        where = f"{path}: line {lineno} (byte {offset})"
        offset += len(line.encode("utf-8")) + 1
        parts = line.split("\t")
        if len(parts) != 4:
            raise GalleryFormatError(f"{where}: expected 4 tab-separated fields")
        subject, ch, idx_text, values_text = parts
        if ch not in meta.channels:
            raise GalleryFormatError(f"{where}: channel {ch!r} not in header")
        try:
            idx = int(idx_text)
            values = np.array([float(v) for v in values_text.split(" ")], dtype=np.float64)
        except ValueError:
            raise GalleryFormatError(f"{where}: malformed number") from None
        if values.size != n_values:
            raise GalleryFormatError(f"{where}: {values.size} values, expected {n_values}")
        if not np.allclose(values.reshape(-1, meta.bins).sum(axis=1), 1.0, atol=1e-6):
            raise GalleryFormatError(f"{where}: region blocks do not sum to 1")
        slot = collected.setdefault(subject, {}).setdefault(ch, {})
        if idx in slot:
            raise GalleryFormatError(f"{where}: duplicate sample {subject}/{ch}/{idx}")
        slot[idx] = Signature(ch, meta.grid_rows, meta.grid_cols, meta.bins, values,
                              np.array(meta.region_weights))

    g = Gallery(meta)
    for subject in sorted(collected):
        per_channel = collected[subject]
        if set(per_channel) != set(meta.channels):
            raise GalleryFormatError(f"{path}: subject {subject!r} lacks some channels")
        n = len(per_channel[meta.channels[0]])
        for ch in meta.channels:
            if sorted(per_channel[ch]) != list(range(n)):
                raise GalleryFormatError(f"{path}: subject {subject!r} channel {ch} has gaps in sample indices")
        for i in range(n):
            g.add_sample(subject, {ch: per_channel[ch][i] for ch in meta.channels})
    return g
