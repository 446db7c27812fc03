import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from rainconcepts.errors import RainconceptsError
from rainconcepts.metrics import (macro_f1, modified_f1, modified_f1_loss,
                                  precision_at_k)

class_maps = hnp.arrays(np.int64, (8, 8),
                        elements=st.integers(min_value=0, max_value=7))


class TestModifiedF1:
    def test_perfect_prediction(self):
        truth = np.random.default_rng(0).integers(0, 8, (10, 10))
        assert modified_f1(truth, truth) == 1.0

    def test_fully_disjoint(self):
        truth = np.full((6, 6), 7)
        pred = np.zeros((6, 6), dtype=int)
        assert modified_f1(pred, truth) == 0.0

    def test_empty_empty_counts_as_perfect(self):
        zeros = np.zeros((4, 4), dtype=int)
        assert modified_f1(zeros, zeros) == 1.0

    @given(class_maps, class_maps, st.integers(min_value=0, max_value=10_000))
    @settings(max_examples=60, deadline=None)
    def test_pixel_permutation_invariance(self, pred, truth, seed):
        perm = np.random.default_rng(seed).permutation(pred.size)
        base = modified_f1(pred, truth)
        shuffled = modified_f1(pred.ravel()[perm].reshape(pred.shape),
                               truth.ravel()[perm].reshape(truth.shape))
        assert base == shuffled

    @given(class_maps, class_maps)
    @settings(max_examples=40, deadline=None)
    def test_bounded(self, pred, truth):
        score = modified_f1(pred, truth)
        assert 0.0 <= score <= 1.0
        assert modified_f1_loss(pred, truth) == 1.0 - score

    def test_shape_mismatch(self):
        with pytest.raises(RainconceptsError):
            modified_f1(np.zeros((2, 2)), np.zeros((3, 3)))


class TestMacroF1:
    def test_known_fixture(self):
        pred = np.array([0, 0, 1, 1])
        truth = np.array([0, 1, 1, 1])
        # class 0: tp=1 fp=1 fn=0 -> 2/3; class 1: tp=2 fp=0 fn=1 -> 4/5
        assert macro_f1(pred, truth, 2) == pytest.approx((2 / 3 + 4 / 5) / 2)

    def test_absent_class_scores_zero(self):
        pred = truth = np.zeros(4, dtype=int)
        assert macro_f1(pred, truth, 2) == pytest.approx(0.5)

    def test_invalid_class_count(self):
        with pytest.raises(RainconceptsError):
            macro_f1(np.zeros(2), np.zeros(2), 0)


class TestPrecisionAtK:
    def test_scalar_labels(self):
        assert precision_at_k([1, 2, 1], 1, 3) == pytest.approx(2 / 3)

    def test_set_labels_intersect(self):
        retrieved = [{1, 2}, {3}, {4, 5}]
        assert precision_at_k(retrieved, {2, 5}, 3) == pytest.approx(2 / 3)

    def test_short_list_divides_by_k(self):
        assert precision_at_k([1], 1, 5) == pytest.approx(1 / 5)

    def test_invalid_k(self):
        with pytest.raises(RainconceptsError):
            precision_at_k([1], 1, 0)
