import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clbp.errors import DegenerateInputError, EmptyInputError, IncompatibleError, ShapeError
from clbp.features import Signature, fvf_signature
from clbp.gallery import Gallery, GalleryMeta
from clbp.matching import (
    EPSILON,
    Metric,
    distance_table,
    kld,
    metric_distance,
    nearest_subject,
    signature_distance,
)


def rand_pdf(r, n):
    v = r.random(n) ** 3
    return v / v.sum()


def kld_oracle(p, q, eps=EPSILON):
    """Symmetrized KL with eps-floor and renormalization in 50-digit arithmetic."""
    mpmath.mp.dps = 50
    p = [mpmath.mpf(float(x)) for x in p]
    q = [mpmath.mpf(float(x)) for x in q]

    def floored(v):
        f = [max(x, mpmath.mpf(eps)) for x in v]
        s = sum(f)
        return [x / s for x in f]

    def d(a, b):
        return sum(x * mpmath.log(x / y) for x, y in zip(a, b) if x > 0)

    return d(p, floored(q)) + d(q, floored(p))


def make_gallery(rng, n_subjects=5, n_samples=3, channels=("H", "S", "I"), grid=(2, 2), bins=8):
    meta = GalleryMeta(grid_rows=grid[0], grid_cols=grid[1], bins=bins, channels=channels)
    g = Gallery(meta)
    m = grid[0] * grid[1]
    for s in range(n_subjects):
        for _ in range(n_samples):
            g.add_sample(f"p{s}", {ch: Signature(ch, grid[0], grid[1], bins,
                                                 np.concatenate([rand_pdf(rng, bins) for _ in range(m)]))
                                   for ch in channels})
    return g


class TestKld:
    def test_hand_value(self):
        # D(p||q~) = log 2 (q~ = q); D(q||p~) with p~ = [1, eps]/(1+eps)
        eps = EPSILON
        hand = np.log(2) + 0.5 * np.log(0.5 * (1 + eps)) + 0.5 * np.log(0.5 * (1 + eps) / eps)
        oracle = float(kld_oracle([1, 0], [0.5, 0.5]))
        assert hand == pytest.approx(oracle, abs=1e-12)
        assert kld([1.0, 0.0], [0.5, 0.5]) == pytest.approx(oracle, abs=1e-12)

    def test_random_against_oracle(self):
        r = np.random.default_rng(8)
        for _ in range(30):
            p, q = rand_pdf(r, 16), rand_pdf(r, 16)
            p[r.integers(16)] = 0
            p /= p.sum()
            assert kld(p, q) == pytest.approx(float(kld_oracle(p, q)), rel=1e-10, abs=1e-12)

    def test_properties(self):
        r = np.random.default_rng(9)
        for _ in range(200):
            p, q = rand_pdf(r, 32), rand_pdf(r, 32)
            assert kld(p, p) == 0.0
            assert kld(p, q) == kld(q, p)
            assert kld(p, q) >= 0

    def test_blocks_and_weights(self):
        r = np.random.default_rng(10)
        p = np.concatenate([rand_pdf(r, 4), rand_pdf(r, 4)])
        q = np.concatenate([rand_pdf(r, 4), rand_pdf(r, 4)])
        d0, d1 = kld(p[:4], q[:4]), kld(p[4:], q[4:])
        assert kld(p, q, bins=4) == pytest.approx(d0 + d1, rel=1e-14)
        assert kld(p, q, bins=4, weights=[0.5, 1.5]) == pytest.approx(0.5 * d0 + 1.5 * d1, rel=1e-14)

    def test_errors(self):
        with pytest.raises(ShapeError):
            kld([1.0], [0.5, 0.5])
        with pytest.raises(ShapeError):
            kld(np.ones(6) / 6, np.ones(6) / 6, bins=4)
        with pytest.raises(ShapeError):
            kld(np.ones(4) / 4, np.ones(4) / 4, bins=2, weights=[1.0])


class TestMetrics:
    @pytest.mark.parametrize("metric", list(Metric))
    def test_identity(self, metric):
        p = rand_pdf(np.random.default_rng(2), 10)
        assert metric_distance(p, p, metric) == 0.0

    def test_simple_values(self):
        assert metric_distance([1, 0], [0, 1], "l1") == 2.0
        assert metric_distance([1, 0], [0, 1], "l2") == pytest.approx(np.sqrt(2))
        assert metric_distance([1, 0], [0, 1], "xcorr") == pytest.approx(2.0)

    def test_random_against_formulas(self):
        r = np.random.default_rng(12)
        for _ in range(50):
            p, q = rand_pdf(r, 20).tolist(), rand_pdf(r, 20).tolist()
            l1 = sum(abs(a - b) for a, b in zip(p, q))
            l2 = sum((a - b) ** 2 for a, b in zip(p, q)) ** 0.5
            mp, mq = sum(p) / 20, sum(q) / 20
            cov = sum((a - mp) * (b - mq) for a, b in zip(p, q))
            vp = sum((a - mp) ** 2 for a in p)
            vq = sum((b - mq) ** 2 for b in q)
            xc = 1 - cov / (vp * vq) ** 0.5
            assert metric_distance(p, q, "L1") == pytest.approx(l1, abs=1e-12)
            assert metric_distance(p, q, "L2") == pytest.approx(l2, abs=1e-12)
            assert metric_distance(p, q, "XCORR") == pytest.approx(xc, abs=1e-12)

    def test_xcorr_zero_variance(self):
        with pytest.raises(DegenerateInputError):
            metric_distance([0.5, 0.5], [1.0, 0.0], "xcorr")

    @settings(max_examples=50, deadline=None)
    @given(st.integers(2, 12), st.integers(0, 2 ** 32 - 1))
    def test_symmetric_nonnegative(self, n, seed):
        r = np.random.default_rng(seed)
        p, q = rand_pdf(r, n), rand_pdf(r, n)
        for metric in ("KLD", "L1", "L2"):
            assert metric_distance(p, q, metric) == metric_distance(q, p, metric) >= 0


class TestNearestSubject:
    def test_exact_sample_wins_at_zero(self, rng):
        g = make_gallery(rng)
        probe = g.signatures("p3", "S")[1]
        res = nearest_subject(probe, g)
        assert res.decision == "p3" and res.ranking[0][1] == 0.0

    def test_single_subject(self, rng):
        g = make_gallery(rng, n_subjects=1)
        other = make_gallery(np.random.default_rng(99), n_subjects=1)
        assert nearest_subject(other.signatures("p0", "I")[0], g).decision == "p0"

    @pytest.mark.parametrize("metric", ["KLD", "L1", "XCORR"])
    def test_brute_force_ranking(self, rng, metric):
        g = make_gallery(rng)
        probe_g = make_gallery(np.random.default_rng(5), n_subjects=1, n_samples=1)
        probe = probe_g.signatures("p0", "H")[0]
        oracle = {}
        for s in g.subject_ids:
            oracle[s] = min(metric_distance(probe.values, sig.values, metric, 8) for sig in g.signatures(s, "H"))
        want = sorted(oracle.items(), key=lambda kv: (kv[1], kv[0]))
        got = nearest_subject(probe, g, metric).ranking
        assert [s for s, _ in got] == [s for s, _ in want]
        assert [d for _, d in got] == pytest.approx([d for _, d in want], rel=1e-12)
        assert len(nearest_subject(probe, g, metric, k=2).ranking) == 2

    def test_fused_probe(self, rng):
        g = make_gallery(rng)
        probe = g.fused("p2")[0]
        assert nearest_subject(probe, g).decision == "p2"

    def test_ties_lexicographic(self):
        meta = GalleryMeta(1, 1, 2, ("I",))
        g = Gallery(meta)
        sig = Signature("I", 1, 1, 2, np.array([0.5, 0.5]))
        for s in ("zed", "amy", "kim"):
            g.add_sample(s, {"I": sig})
        assert [s for s, _ in nearest_subject(sig, g).ranking] == ["amy", "kim", "zed"]

    def test_incompatible(self, rng):
        g = make_gallery(rng)
        with pytest.raises(IncompatibleError):
            nearest_subject(Signature("I", 1, 1, 8, np.ones(8) / 8), g)
        with pytest.raises(IncompatibleError):
            nearest_subject(Signature("Y", 2, 2, 8, np.ones(32) / 8), g)
        with pytest.raises(EmptyInputError):
            nearest_subject(g.signatures("p0", "I")[0], Gallery(g.meta))

    def test_argmin_invariant_under_monotone_transform(self, rng):
        g = make_gallery(rng)
        probe = make_gallery(np.random.default_rng(77), 1, 1).signatures("p0", "I")[0]
        ranking = nearest_subject(probe, g).ranking
        transformed = sorted(((s, np.exp(3 * d) + 1) for s, d in ranking), key=lambda kv: (kv[1], kv[0]))
        assert transformed[0][0] == ranking[0][0]


class TestDistanceTable:
    def test_entries(self, rng):
        g = make_gallery(rng)
        probe = g.samples("p1")[0]
        table = distance_table(probe, g)
        assert table.channels == ["H", "I", "S"]
        assert len(table.entries) == 15
        assert all(table.channel(ch)["p1"] == 0.0 for ch in "HSI")
        d = signature_distance(probe["H"], g.signatures("p4", "H")[2])
        assert table.entries[("p4", "H")] <= d

    def test_fvf_equals_signature_values(self, rng):
        g = make_gallery(rng)
        f = fvf_signature(list(g.samples("p0")[0].values()))
        assert f.values.size == 3 * 4 * 8
