from pathlib import Path

import numpy as np
import pytest

from clbp.errors import GalleryFormatError, IncompatibleError
from clbp.features import Signature
from clbp.gallery import MAGIC, Gallery, GalleryMeta, load_gallery, save_gallery

FIXTURE = Path(__file__).parent / "fixtures" / "minimal_gallery.txt"


def pdf_blocks(rng, m, bins):
    v = rng.random((m, bins)) ** 4  # spread magnitudes, including tiny values
    return (v / v.sum(1, keepdims=True)).ravel()


def build(rng, subjects=("bob", "alice"), samples=2, meta=None):
    meta = meta or GalleryMeta(grid_rows=2, grid_cols=3, bins=16, channels=("I", "H"))
    g = Gallery(meta)
    m = meta.grid_rows * meta.grid_cols
    for s in subjects:
        for _ in range(samples):
            g.add_sample(s, {ch: Signature(ch, meta.grid_rows, meta.grid_cols, meta.bins,
                                           pdf_blocks(rng, m, meta.bins), np.array(meta.region_weights))
                             for ch in meta.channels})
    return g


def test_roundtrip_bit_exact(tmp_path, rng):
    g = build(rng)
    path = tmp_path / "g.txt"
    save_gallery(g, path)
    back = load_gallery(path)
    assert back == g
    for s in g.subject_ids:
        for ch in g.meta.channels:
            for a, b in zip(g.signatures(s, ch), back.signatures(s, ch)):
                assert a.values.tobytes() == b.values.tobytes()
    save_gallery(back, tmp_path / "again.txt")
    assert (tmp_path / "again.txt").read_bytes() == path.read_bytes()


def test_roundtrip_with_weights(tmp_path, rng):
    meta = GalleryMeta(grid_rows=1, grid_cols=3, bins=4, channels=("S",), region_weights=(0.5, 2.0, 0.5))
    g = build(rng, meta=meta)
    save_gallery(g, tmp_path / "w.txt")
    back = load_gallery(tmp_path / "w.txt")
    assert back.meta.region_weights == (0.5, 2.0, 0.5)
    assert back.signatures("bob", "S")[0].region_weights.tolist() == [0.5, 2.0, 0.5]


def test_header_layout(tmp_path, rng):
    save_gallery(build(rng), tmp_path / "g.txt")
    lines = (tmp_path / "g.txt").read_text().split("\n")
    assert lines[0] == MAGIC
    header = dict(line.split("=", 1) for line in lines[1:lines.index("")])
    assert header["grid"] == "2x3" and header["bins"] == "16" and header["channels"] == "H,I"
    assert header["neighbor_order"] == "tl-cw" and header["records"] == "8"
    record = lines[lines.index("") + 1].split("\t")
    assert record[:3] == ["alice", "H", "0"] and len(record[3].split(" ")) == 96


def test_minimal_fixture_loads():
    g = load_gallery(FIXTURE)
    assert g.subject_ids == ["alice"]
    assert g.meta.grid == (1, 1) and g.meta.bins == 4 and g.meta.channels == ("I",)
    assert g.signatures("alice", "I")[0].values.tolist() == [0.25, 0.5, 0.125, 0.125]


@pytest.mark.parametrize("cut", [1, 10, 40, 200])
def test_truncation_rejected(tmp_path, rng, cut):
    path = tmp_path / "g.txt"
    save_gallery(build(rng), path)
    data = path.read_bytes()
    path.write_bytes(data[:-cut])
    with pytest.raises(GalleryFormatError):
        load_gallery(path)


def test_truncated_at_record_boundary(tmp_path, rng):
    path = tmp_path / "g.txt"
    save_gallery(build(rng), path)
    lines = path.read_text().splitlines(keepends=True)
    path.write_text("".join(lines[:-1]))
    with pytest.raises(GalleryFormatError, match="expected 8 records"):
        load_gallery(path)


@pytest.mark.parametrize("mutate, message", [
    (lambda t: t.replace("CLBP-GALLERY v1", "CLBP-GALLERY v2"), "version"),
    (lambda t: t.replace("format_version=1", "format_version=7"), "format_version"),
    (lambda t: t.replace("bins=4\n", ""), "bins"),
    (lambda t: t.replace("0.25 0.5", "0.25 0.6"), "sum to 1"),
    (lambda t: t.replace("0.25 0.5", "0.25 x"), "malformed"),
    (lambda t: t.replace("0.125 0.125", "0.25"), "values"),
    (lambda t: t.replace("\tI\t", "\tY\t"), "channel"),
    (lambda t: t.replace("\t0\t", "\t1\t"), "gaps"),
    (lambda t: t.replace("neighbor_order", "x").replace("records=1", "neighbor_order=ccw\nrecords=1"), "neighbor"),
])
def test_corrupt_files(tmp_path, mutate, message):
    path = tmp_path / "bad.txt"
    path.write_text(mutate(FIXTURE.read_text()))
    with pytest.raises(GalleryFormatError, match=message):
        load_gallery(path)


def test_error_reports_line_and_byte(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(FIXTURE.read_text().replace("0.25 0.5", "0.25 0.6"))
    # header bytes: 16 + 17 + 9 + 7 + 11 + 10 + blank line 1 = 71
    with pytest.raises(GalleryFormatError, match=r"line 8 \(byte 71\)"):
        load_gallery(path)


def test_expected_metadata_mismatch():
    with pytest.raises(IncompatibleError):
        load_gallery(FIXTURE, expect=GalleryMeta(grid_rows=1, grid_cols=1, bins=8, channels=("I",)))
    assert load_gallery(FIXTURE, expect=GalleryMeta(grid_rows=1, grid_cols=1, bins=4, channels=("I",)))


def test_add_sample_validation(rng):
    g = Gallery(GalleryMeta(grid_rows=1, grid_cols=1, bins=4, channels=("I",)))
    with pytest.raises(IncompatibleError):
        g.add_sample("a", {"H": Signature("H", 1, 1, 4, np.full(4, 0.25))})
    with pytest.raises(IncompatibleError):
        g.add_sample("a", {"I": Signature("I", 1, 1, 2, np.full(2, 0.5))})
    with pytest.raises(ValueError):
        g.add_sample("a\tb", {"I": Signature("I", 1, 1, 4, np.full(4, 0.25))})


def test_no_temp_file_left(tmp_path, rng):
    save_gallery(build(rng), tmp_path / "g.txt")
    assert sorted(p.name for p in tmp_path.iterdir()) == ["g.txt"]
