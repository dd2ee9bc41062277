from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from segrank.errors import ShapeError
from segrank.matching import (
    Assignment,
    ScoreMatrix,
    classify_detections,
    hungarian_match,
    match_instances,
    overlap_scores,
)

from _oracles import best_assignment, iou_oracle, random_label_mask

score_matrices = st.tuples(st.integers(0, 5), st.integers(0, 5)).flatmap(
    lambda s: arrays(np.float64, s, elements=st.sampled_from([0.0, 0.125, 0.25, 0.5, 0.75, 1.0]))
)


def _pairs(a: Assignment):
    return [(r, p) for r, p, _ in a.pairs]


class TestHungarian:
    def test_single(self, backend):
        a = hungarian_match(ScoreMatrix.from_array([[0.7]]))
        assert a.pairs == [(0, 0, 0.7)]

    def test_two_by_two(self, backend):
        a = hungarian_match(ScoreMatrix.from_array([[0.9, 0.1], [0.2, 0.8]]))
        assert _pairs(a) == [(0, 0), (1, 1)]
        assert a.total == pytest.approx(1.7, abs=1e-15)

    def test_empty(self, backend):
        a = hungarian_match(ScoreMatrix([], [1, 2], np.zeros((0, 2))))
        assert a.pairs == [] and a.unmatched_preds == [1, 2]
        b = hungarian_match(ScoreMatrix([3], [], np.zeros((1, 0))))
        assert b.pairs == [] and b.unmatched_refs == [3]

    def test_rectangular(self, backend):
        a = hungarian_match(ScoreMatrix.from_array([[0.1, 0.9, 0.3]]))
        assert _pairs(a) == [(0, 1)]
        assert a.unmatched_preds == [0, 2]
        b = hungarian_match(ScoreMatrix.from_array([[0.1], [0.9], [0.3]]))
        assert _pairs(b) == [(1, 0)] and b.unmatched_refs == [0, 2]

    def test_lexicographic_tie_break(self, backend):
        a = hungarian_match(ScoreMatrix.from_array(np.full((3, 3), 0.5)))
        assert _pairs(a) == [(0, 0), (1, 1), (2, 2)]
        # labels, not positions, drive the order
        b = hungarian_match(ScoreMatrix([9, 4], [7, 2], np.full((2, 2), 0.5)))
        assert _pairs(b) == [(4, 2), (9, 7)]

    def test_all_zero_still_pairs(self, backend):
        a = hungarian_match(ScoreMatrix.from_array(np.zeros((2, 3))))
        assert len(a.pairs) == 2

    def test_scores_out_of_range(self):
        with pytest.raises(ValueError):
            ScoreMatrix.from_array([[1.5]])

    def test_random_against_permutations(self, backend):
        rng = np.random.default_rng(2)
        for _ in range(150):
            s = rng.random((rng.integers(1, 7), rng.integers(1, 7)))
            total, pairs = best_assignment(s)
            a = hungarian_match(ScoreMatrix.from_array(s))
            assert a.total == total
            assert _pairs(a) == pairs

    @settings(max_examples=200, deadline=None)
    @given(score_matrices)
    def test_ties_resolved_like_oracle(self, s):
        a = hungarian_match(ScoreMatrix(list(range(s.shape[0])), list(range(s.shape[1])), s))
        total, pairs = best_assignment(s)
        assert a.total == total
        assert _pairs(a) == pairs
        n, m = s.shape
        assert len(a.pairs) == min(n, m)
        used_r = [r for r, _ in _pairs(a)] + a.unmatched_refs
        used_c = [c for _, c in _pairs(a)] + a.unmatched_preds
        assert sorted(used_r) == list(range(n)) and sorted(used_c) == list(range(m))


class TestMatchInstances:
    def test_one_each(self):
        ref = np.zeros((5, 5), int)
        pred = np.zeros((5, 5), int)
        ref[0:2, 0:2] = 1
        pred[3:5, 3:5] = 4
        for score in ("iou", "dsc"):
            a = match_instances(ref, pred, score)
            assert _pairs(a) == [(1, 4)]

    def test_crossed_labels(self):
        ref = np.zeros((6, 6), int)
        ref[0:3, :] = 1
        ref[3:6, :] = 2
        pred = np.where(ref == 1, 2, np.where(ref == 2, 1, 0))
        a = match_instances(ref, pred)
        assert _pairs(a) == [(1, 2), (2, 1)]
        assert a.total == 2.0

    def test_three_refs_one_pred(self):
        ref = np.zeros((3, 9), int)
        ref[:, 0:3], ref[:, 3:6], ref[:, 6:9] = 1, 2, 3
        pred = np.zeros((3, 9), int)
        pred[:, 3:6] = 1
        a = match_instances(ref, pred)
        assert _pairs(a) == [(2, 1)]
        assert a.unmatched_refs == [1, 3]

    def test_overlap_scores_against_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            ref = random_label_mask(rng, (16, 16))
            pred = random_label_mask(rng, (16, 16))
            sm = overlap_scores(ref, pred, "iou")
            for i, r in enumerate(sm.rows):
                for j, p in enumerate(sm.cols):
                    assert sm.score[i, j] == iou_oracle(ref == r, pred == p)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            match_instances(np.zeros((2, 2)), np.zeros((2, 3)))

    def test_unknown_score(self):
        with pytest.raises(ValueError):
            overlap_scores(np.ones((2, 2), int), np.ones((2, 2), int), "hausdorff")

    def test_relabeling_permutes_assignment(self):
        rng = np.random.default_rng(8)
        for _ in range(30):
            ref = random_label_mask(rng, (16, 16))
            pred = random_label_mask(rng, (16, 16))
            perm = rng.permutation(np.arange(1, 5)) + 10
            relabeled = np.where(pred > 0, perm[np.maximum(pred, 1) - 1], 0)
            a = match_instances(ref, pred)
            b = match_instances(ref, relabeled)
            assert a.total == pytest.approx(b.total, abs=1e-12)
            assert len(a.pairs) == len(b.pairs)


class TestClassify:
    def test_weak_pair(self):
        out = classify_detections(Assignment([(1, 1, 0.25)]), 0.3)
        assert (out.tp, out.fn, out.fp) == (0, 1, 1)

    def test_threshold_is_strict(self):
        out = classify_detections(Assignment([(1, 1, 0.3)]), 0.3)
        assert out.tp == 0

    def test_extra_prediction(self):
        out = classify_detections(Assignment([(1, 1, 1.0), (2, 2, 1.0)], [], [3]))
        assert (out.tp, out.fn, out.fp) == (2, 0, 1)
        assert out.tp_pairs == [(1, 1, 1.0), (2, 2, 1.0)]

    @settings(max_examples=150, deadline=None)
    @given(score_matrices, st.floats(0.01, 0.99))
    def test_conservation(self, s, xi):
        sm = ScoreMatrix(list(range(s.shape[0])), list(range(s.shape[1])), s)
        out = classify_detections(hungarian_match(sm), xi)
        assert out.tp + out.fn == s.shape[0]
        assert out.tp + out.fp == s.shape[1]
