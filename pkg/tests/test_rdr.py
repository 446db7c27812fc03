import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rainconcepts.errors import RainconceptsError
from rainconcepts.rdr import (PrincipalComponentMap, load_map, negative_vector,
                              save_map, select_components)


def oracle_select(pos, neg, d):
    """Reference implementation: score then stable top-d."""
    negvec = (neg > 0).mean(axis=0)
    score = np.abs((pos > 0).astype(float) - negvec).mean(axis=0)
    order = sorted(range(score.size), key=lambda i: (-score[i], i))
    return tuple(sorted(order[:d]))


class TestSelection:
    @given(st.integers(min_value=0, max_value=10_000),
           st.integers(min_value=1, max_value=8))
    @settings(max_examples=30, deadline=None)
    def test_matches_oracle(self, seed, d):
        rng = np.random.default_rng(seed)
        pos = rng.normal(size=(12, 10)) * (rng.random((12, 10)) < 0.5)
        neg = rng.normal(size=(15, 10)) * (rng.random((15, 10)) < 0.5)
        assert select_components(pos, neg, d=d) == oracle_select(pos, neg, d)

    def test_ties_prefer_lower_index(self):
        pos = np.ones((4, 6))
        neg = np.zeros((4, 6))  # every coordinate scores 1.0
        assert select_components(pos, neg, d=3) == (0, 1, 2)

    def test_d_clamped_with_warning(self):
        pos, neg = np.ones((3, 4)), np.zeros((3, 4))
        with pytest.warns(UserWarning, match="clamping"):
            idx = select_components(pos, neg, d=10)
        assert len(idx) == 4

    def test_discriminative_coordinate_wins(self):
        rng = np.random.default_rng(5)
        pos = np.abs(rng.normal(size=(20, 8))) * 0.1
        neg = np.abs(rng.normal(size=(20, 8))) * 0.1
        pos[:, 3] = 1.0   # always on for positives
        neg[:, 3] = 0.0   # never for negatives
        assert 3 in select_components(pos, neg, d=1)

    def test_empty_sets_rejected(self):
        with pytest.raises(RainconceptsError):
            select_components(np.empty((0, 4)), np.ones((3, 4)))
        with pytest.raises(RainconceptsError):
            negative_vector(np.empty((0, 4)))

    def test_invalid_d(self):
        with pytest.raises(RainconceptsError):
            select_components(np.ones((2, 3)), np.zeros((2, 3)), d=0)


class TestMap:
    def test_union_sorted_unique(self):
        pc = PrincipalComponentMap(per_concept={0: (4, 1), 1: (1, 7)}, d=2)
        assert list(pc.union([0, 1])) == [1, 4, 7]

    def test_round_trip(self, tmp_path):
        pc = PrincipalComponentMap(per_concept={0: (0, 3, 5), 2: (1, 2, 9)}, d=3)
        path = tmp_path / "pc.pcmp"
        save_map(path, pc)
        back = load_map(path)
        assert back.per_concept == pc.per_concept
        assert back.d == 3

    def test_inconsistent_length_refused(self, tmp_path):
        pc = PrincipalComponentMap(per_concept={0: (0, 1)}, d=3)
        with pytest.raises(RainconceptsError):
            save_map(tmp_path / "pc", pc)

    def test_save_is_deterministic(self, tmp_path):
        pc = PrincipalComponentMap(per_concept={1: (2, 4), 0: (0, 1)}, d=2)
        save_map(tmp_path / "a", pc)
        save_map(tmp_path / "b", pc)
        assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()
