import numpy as np
import pytest

from psp_eval.centroids import CentroidEntry, CentroidSet
from psp_eval.ctc_align import AlignmentSpan
from psp_eval.errors import DegenerateFloor, EmptyTokens, ZeroVector
from psp_eval.interchange import make_table
from psp_eval.probes import (
    TokenFidelity,
    aggregate,
    fidelity,
    fidelity_components,
    lf_fidelity,
    normalize_floor,
    score_per_phoneme,
)
from synth import make_bundle

RR_TABLE = make_table("te", "RR", {"ట"}, {"త"}, {"ట": "త"})
LF_TABLE = make_table("te", "LF", {"ీ"}, {"ి"}, {"ీ": "ి"})


def span(grapheme, start, end, index=0):
    return AlignmentSpan(index, grapheme, start, end, 0.0)


class TestFidelity:
    def test_at_native_orthogonal_sub(self):
        e = np.array([1.0, 0.0])
        assert fidelity(e, e, np.array([0.0, 1.0])) == pytest.approx(1.0)

    def test_equal_cosines(self):
        e = np.array([1.0, 1.0])
        assert fidelity(e, np.array([1.0, 0.0]), np.array([0.0, 1.0])) == pytest.approx(0.5)

    def test_worked_example(self):
        e = np.array([1.0, 0.0])
        mu_nat = np.array([1.0, 1.0]) / np.sqrt(2)
        mu_sub = np.array([0.0, 1.0])
        fid, s_nat, s_sub = fidelity_components(e, mu_nat, mu_sub)
        assert s_nat == pytest.approx(0.7071, abs=1e-4)
        assert s_sub == 0.0
        assert fid == pytest.approx(1.0)

    def test_both_rectified_zero(self):
        e = np.array([1.0, 0.0])
        fid, s_nat, s_sub = fidelity_components(
            e, np.array([-1.0, 0.0]), np.array([-1.0, -1.0])
        )
        assert (s_nat, s_sub) == (0.0, 0.0)
        assert fid == 0.5

    def test_scale_invariance(self, rng):
        for _ in range(1000):
            d = int(rng.integers(2, 10))
            e, mn, ms = rng.normal(size=(3, d))
            if min(map(np.linalg.norm, (e, mn, ms))) == 0:
                continue
            c = float(rng.uniform(0.01, 100.0))
            assert fidelity(c * e, mn, ms) == pytest.approx(fidelity(e, mn, ms), abs=1e-12)

    def test_monotone_in_native_similarity(self, rng):
        # fixed e and mu_sub; rotate mu_nat toward e => fidelity rises
        e = np.array([1.0, 0.0])
        mu_sub = np.array([np.cos(1.0), np.sin(1.0)])  # s_sub fixed > 0
        for _ in range(1000):
            th1, th2 = np.sort(rng.uniform(0.0, np.pi / 2 - 1e-3, size=2))
            f_closer = fidelity(e, np.array([np.cos(th1), np.sin(th1)]), mu_sub)
            f_farther = fidelity(e, np.array([np.cos(th2), np.sin(th2)]), mu_sub)
            if th1 < th2:
                assert f_closer >= f_farther
                if not np.isclose(th1, th2):
                    assert f_closer > f_farther

    def test_zero_vector(self):
        with pytest.raises(ZeroVector):
            fidelity(np.zeros(3), np.ones(3), np.ones(3))


class TestScorePerPhoneme:
    def centroids(self, d=4):
        mu_nat = np.eye(d)[0]
        mu_sub = np.eye(d)[1]
        return CentroidSet(
            language="te",
            entries={("RR", "ట"): CentroidEntry(mu_nat, mu_sub, 10, 10)},
        ), mu_nat, mu_sub

    def test_no_native_graphemes(self):
        cs, _, _ = self.centroids()
        b = make_bundle("u", ["<b>", "క"], [1, 1, 0], text="క")
        assert score_per_phoneme(b, [span("క", 0, 2)], RR_TABLE, cs) == []

    def test_planted_native(self):
        cs, mu_nat, _ = self.centroids()
        b = make_bundle("u", ["<b>", "ట"], [1, 1, 0], emb_dim=4)
        b.embeddings = np.tile(mu_nat, (3, 1)).astype(np.float32)
        toks = score_per_phoneme(b, [span("ట", 0, 2)], RR_TABLE, cs)
        assert len(toks) == 1
        assert toks[0].fidelity == pytest.approx(1.0)
        assert not toks[0].collapsed

    def test_planted_substitute_collapses(self):
        cs, _, mu_sub = self.centroids()
        b = make_bundle("u", ["<b>", "ట"], [1, 1, 0], emb_dim=4)
        b.embeddings = np.tile(mu_sub, (3, 1)).astype(np.float32)
        toks = score_per_phoneme(b, [span("ట", 0, 2)], RR_TABLE, cs)
        assert toks[0].fidelity == pytest.approx(0.0)
        assert toks[0].collapsed

    def test_missing_entry_skipped(self, caplog):
        cs = CentroidSet(language="te", entries={})
        b = make_bundle("u", ["<b>", "ట"], [1, 1, 0])
        with caplog.at_level("WARNING"):
            toks = score_per_phoneme(b, [span("ట", 0, 2)], RR_TABLE, cs)
        assert toks == []
        assert any("centroid entry" in r.message for r in caplog.records)

    def test_tau_tie_not_collapsed(self):
        # fidelity exactly 0.5 stays un-collapsed: the threshold is strict
        cs, _, _ = self.centroids()
        e = (cs.entries[("RR", "ట")].native_centroid
             + cs.entries[("RR", "ట")].substitute_centroid)
        b = make_bundle("u", ["<b>", "ట"], [1, 0], emb_dim=4)
        b.embeddings = np.tile(e, (2, 1)).astype(np.float32)
        toks = score_per_phoneme(b, [span("ట", 0, 1)], RR_TABLE, cs)
        assert toks[0].fidelity == pytest.approx(0.5)
        assert not toks[0].collapsed


class TestLfFidelity:
    def test_native_ratio_scores_one(self):
        spans = [span("ీ", 0, 19, 0), span("ి", 19, 29, 1)]  # ratio 1.9
        assert lf_fidelity(spans, LF_TABLE, 1.9) == pytest.approx(1.0)

    def test_no_contrast_scores_zero(self):
        spans = [span("ీ", 0, 10, 0), span("ి", 10, 20, 1)]  # ratio 1.0
        assert lf_fidelity(spans, LF_TABLE, 1.9) == pytest.approx(0.0)

    def test_midpoint(self):
        spans = [span("ీ", 0, 145, 0), span("ి", 145, 245, 1)]  # ratio 1.45
        assert lf_fidelity(spans, LF_TABLE, 1.90) == pytest.approx(0.5)

    def test_absent_without_contrast_tokens(self):
        assert lf_fidelity([span("ీ", 0, 5)], LF_TABLE, 1.9) is None
        assert lf_fidelity([span("ి", 0, 5)], LF_TABLE, 1.9) is None

    def test_monotone_in_ratio(self):
        values = []
        for long_frames in range(10, 20):
            spans = [span("ీ", 0, long_frames, 0), span("ి", 50, 60, 1)]
            values.append(lf_fidelity(spans, LF_TABLE, 1.9))
        assert values == sorted(values)


def token(uid, fid, tau=0.5, dim="RR"):
    return TokenFidelity(uid, dim, "ట", fid, fid < tau, span("ట", 0, 1))


class TestAggregate:
    def test_mean_and_collapse(self):
        score = aggregate([token("u1", 1.0), token("u1", 0.0)], level="utterance")
        assert score.mean_fidelity == pytest.approx(0.5)
        assert score.collapse_rate == pytest.approx(0.5)

    def test_corpus_is_pooled_mean(self):
        toks = [token("u1", 1.0)] + [token("u2", 0.0)] * 3
        score = aggregate(toks, level="corpus")
        assert score.mean_fidelity == pytest.approx(0.25)
        assert score.n_tokens == 4

    def test_half_collapsed(self):
        toks = [token(f"u{i}", 0.9) for i in range(15)]
        toks += [token(f"u{i}", 0.1) for i in range(15, 30)]
        score = aggregate(toks, level="corpus")
        assert score.collapse_rate == pytest.approx(0.5)
        assert score.n_tokens == 30

    def test_all_above_tau(self):
        assert aggregate([token("u", 0.6)] * 5).collapse_rate == 0.0
        assert aggregate([token("u", 0.4)] * 5).collapse_rate == 1.0

    def test_empty(self):
        with pytest.raises(EmptyTokens):
            aggregate([])


class TestNormalizeFloor:
    def test_published_cells(self):
        assert normalize_floor(0.786, 0.538) == pytest.approx(0.537, abs=1e-3)

    def test_at_floor(self):
        assert normalize_floor(0.42, 0.42) == 0.0

    def test_perfect_system(self):
        for f in (0.0, 0.3, 0.9):
            assert normalize_floor(1.0, f) == pytest.approx(1.0)

    def test_degenerate(self):
        with pytest.raises(DegenerateFloor):
            normalize_floor(0.9, 1.0)
