import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from clbp.errors import ColorspaceError, EmptyInputError, NoSkinRegionError
from clbp.imaging import Colorspace, PlanarImage, rgb_to_hsi
from clbp.segmentation import (
    BBox,
    fill_holes,
    largest_component_bbox,
    segment_face,
    skin_mask,
    smqt,
)

SKIN = (200, 140, 110)
TEAL = (40, 140, 120)


def hsi_pixels(hs):
    h = np.array([[x for x, _ in hs]], dtype=float)
    s = np.array([[y for _, y in hs]], dtype=float)
    return PlanarImage(Colorspace.HSI, (h, s, np.full(h.shape, 100.0)))


def scene(shape, rects, fg=SKIN, bg=TEAL):
    arr = np.empty(shape + (3,))
    arr[...] = bg
    for y, x, h, w in rects:
        arr[y:y + h, x:x + w] = fg
    return arr


def border_flood_oracle(mask):
    """Background reachable from the border (4-neighbors) by BFS."""
    h, w = mask.shape
    seen = np.zeros_like(mask)
    stack = [(r, c) for r in range(h) for c in range(w)
             if (r in (0, h - 1) or c in (0, w - 1)) and not mask[r, c]]
    for r, c in stack:
        seen[r, c] = True
    while stack:
        r, c = stack.pop()
        for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            rr, cc = r + dr, c + dc
            if 0 <= rr < h and 0 <= cc < w and not mask[rr, cc] and not seen[rr, cc]:
                seen[rr, cc] = True
                stack.append((rr, cc))
    return ~seen


def union_find_oracle(mask):
    """Largest 8-connected component as (size, first raster pixel, bbox)."""
    h, w = mask.shape
    parent = {}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for r, c in zip(*np.nonzero(mask)):
        parent[(r, c)] = (r, c)
    for (r, c) in list(parent):
        for dr, dc in itertools.product((-1, 0, 1), repeat=2):
            n = (r + dr, c + dc)
            if n in parent:
                ra, rb = find((r, c)), find(n)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    comps = {}
    for p in parent:
        comps.setdefault(find(p), []).append(p)
    pixels = max(comps.values(), key=lambda px: (len(px), [-v for v in min(px)]))
    rows = [p[0] for p in pixels]
    cols = [p[1] for p in pixels]
    return BBox(min(cols), min(rows), max(cols) - min(cols) + 1, max(rows) - min(rows) + 1)


class TestSmqt:
    def test_constant_goes_upper(self):
        assert np.all(smqt(np.full((3, 4), 9.0), 1) == 1)

    def test_mean_threshold(self):
        assert smqt(np.array([[1, 2, 3, 4]]), 1).tolist() == [[0, 0, 1, 1]]

    def test_two_levels_by_hand(self):
        # level 1 splits at 4.5; lower half mean 2.5, upper half mean 6.5
        d = np.arange(1, 9).reshape(2, 4)
        assert smqt(d, 2).ravel().tolist() == [0, 0, 1, 1, 2, 2, 3, 3]

    def test_label_range(self, rng):
        for level in (1, 3, 8):
            out = smqt(rng.normal(size=(16, 16)), level)
            assert out.min() >= 0 and out.max() < 2 ** level

    def test_gain_bias_invariance_distinct_values(self):
        r = np.random.default_rng(11)
        for _ in range(20):
            d = r.permutation(64).reshape(8, 8).astype(float)
            for level in (1, 2, 3):
                ref = smqt(d, level)
                for a, b in ((2.0, 0.0), (0.5, -7.0), (3.0, 11.0)):
                    assert np.array_equal(smqt(a * d + b, level), ref)

    def test_errors(self):
        with pytest.raises(EmptyInputError):
            smqt(np.zeros((0, 2)))
        with pytest.raises(ValueError):
            smqt(np.ones((2, 2)), 9)


class TestSkinMask:
    def test_examples(self):
        m = skin_mask(hsi_pixels([(0.10, 0.30), (0.40, 0.50), (0.70, 0.05)]))
        assert m.ravel().tolist() == [True, False, False]

    def test_truth_table(self):
        # each clause true/false: hue-low, hue-high, saturation
        hues = {(True, False): 0.05, (False, True): 0.80, (False, False): 0.40}
        for (low, high), h in hues.items():
            for sat in (True, False):
                s = 0.5 if sat else 0.05
                expected = (low or high) and sat
                assert bool(skin_mask(hsi_pixels([(h, s)]))[0, 0]) == expected
        # both hue clauses cannot hold at once; boundaries are strict
        assert skin_mask(hsi_pixels([(0.17, 0.5), (0.63, 0.5), (0.1, 0.1)])).ravel().tolist() == [False] * 3

    def test_requires_hsi(self):
        with pytest.raises(ColorspaceError):
            skin_mask(PlanarImage.from_array(np.zeros((2, 2, 3))))


class TestFillHoles:
    def test_empty(self):
        assert not np.any(fill_holes(np.zeros((5, 5), bool)))

    def test_ring(self):
        m = np.zeros((7, 7), bool)
        m[1:6, 1:6] = True
        m[2:5, 2:5] = False
        out = fill_holes(m)
        assert np.array_equal(out, np.pad(np.ones((5, 5), bool), 1))

    def test_c_shape_open_to_border(self):
        m = np.zeros((7, 7), bool)
        m[1:6, 1:6] = True
        m[2:5, 2:7] = False  # pocket opens through the right border
        assert np.array_equal(fill_holes(m), m)
        assert np.array_equal(fill_holes(m), border_flood_oracle(m))

    def test_diagonal_leak_is_not_a_path(self):
        # interior pixel touches the outside only diagonally: 4-connectivity fills it
        m = np.array([[0, 1, 0],
                      [1, 0, 1],
                      [0, 1, 0]], bool)
        m = np.pad(m, 1)
        assert fill_holes(m)[2, 2]

    @settings(max_examples=80, deadline=None)
    @given(arrays(bool, st.tuples(st.integers(1, 12), st.integers(1, 12))))
    def test_matches_oracle_idempotent_monotone(self, m):
        out = fill_holes(m)
        assert np.array_equal(out, border_flood_oracle(m))
        assert np.array_equal(fill_holes(out), out)
        assert np.all(out[m])


class TestLargestComponent:
    def test_single_pixel(self):
        m = np.zeros((10, 10), bool)
        m[5, 3] = True
        assert largest_component_bbox(m) == (3, 5, 1, 1)

    def test_strict_maximum(self):
        m = np.zeros((20, 20), bool)
        m[0:2, 0:5] = True       # 10 pixels
        m[10:15, 10:15] = True   # 25 pixels
        assert largest_component_bbox(m) == (10, 10, 5, 5)

    def test_tie_goes_topmost_then_leftmost(self):
        m = np.zeros((10, 10), bool)
        m[6:8, 0:2] = True
        m[1:3, 7:9] = True
        m[1:3, 3:5] = True
        assert largest_component_bbox(m) == (3, 1, 2, 2)

    def test_diagonal_is_connected(self):
        m = np.eye(4, dtype=bool)
        assert largest_component_bbox(m) == (0, 0, 4, 4)

    def test_random_against_union_find(self):
        r = np.random.default_rng(21)
        for _ in range(40):
            m = r.random((15, 18)) < 0.3
            if m.any():
                assert largest_component_bbox(m) == union_find_oracle(m)

    def test_empty(self):
        with pytest.raises(NoSkinRegionError, match="no skin region"):
            largest_component_bbox(np.zeros((3, 3), bool))


class TestSegmentFace:
    def test_rectangle_exact(self):
        img = PlanarImage.from_array(scene((40, 50), [(8, 12, 20, 15)]))
        face = segment_face(img)
        assert face.bbox == (12, 8, 15, 20)
        assert face.crop.shape == (20, 15)
        assert face.mask.all()

    def test_holes_filled_bbox_unchanged(self):
        arr = scene((40, 50), [(8, 12, 20, 15)])
        arr[12:14, 15:17] = TEAL  # eyes
        arr[12:14, 21:23] = TEAL
        face = segment_face(PlanarImage.from_array(arr))
        assert face.bbox == (12, 8, 15, 20)
        assert face.mask.all()

    def test_hsi_input_same_result(self):
        img = PlanarImage.from_array(scene((30, 30), [(3, 4, 10, 12)]))
        assert segment_face(rgb_to_hsi(img)).bbox == segment_face(img).bbox

    def test_no_skin(self):
        img = PlanarImage.from_array(scene((20, 20), []))
        with pytest.raises(NoSkinRegionError, match="no skin region"):
            segment_face(img)

    def test_mask_drops_other_blobs(self):
        # L-shaped face blob whose box also covers a separate small blob
        arr = scene((30, 30), [(2, 2, 20, 4), (18, 2, 4, 18), (5, 12, 3, 3)])
        face = segment_face(PlanarImage.from_array(arr))
        assert face.bbox == (2, 2, 18, 20)
        assert not face.mask[3:6, 10:13].any()
        assert face.mask[0:20, 0:4].all()

    def test_crop_inside_image(self, rng):
        for _ in range(10):
            arr = rng.integers(0, 256, (25, 25, 3)).astype(float)
            img = PlanarImage.from_array(arr)
            try:
                face = segment_face(img)
            except NoSkinRegionError:
                continue
            x, y, w, h = face.bbox
            assert w > 0 and h > 0 and x + w <= 25 and y + h <= 25
            assert face.mask.shape == (h, w)
