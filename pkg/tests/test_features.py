import numpy as np
import pytest

from rainconcepts.errors import MissingArtifactError, RainconceptsError
from rainconcepts.features import load_store, save_store
from rainconcepts.model import SegmentFeature
from rainconcepts.preprocess import utc


def make_features(rng, n=7, dim=12):
    feats = []
    for i in range(n):
        feats.append(SegmentFeature(
            vector=rng.normal(size=dim).astype(np.float32),
            timestamp=utc(2021, 7, 1, i, 0),
            segment_id=i % 3 + 1,
            bbox=(0, 0, 4 + i, 4),
            pixel_count=10 + i,
        ))
    return feats


def test_round_trip(tmp_path):
    feats = make_features(np.random.default_rng(0))
    path = tmp_path / "store.fstr"
    save_store(path, feats)
    store = load_store(path)
    assert len(store) == len(feats)
    assert store.dim == 12
    for i, f in enumerate(feats):
        assert np.array_equal(store.vectors[i], f.vector)
        assert store.key(i) == (int(f.timestamp.timestamp()), f.segment_id)
        assert store.datetime_at(i) == f.timestamp
        assert tuple(store.bboxes[i]) == f.bbox


def test_save_is_deterministic(tmp_path):
    feats = make_features(np.random.default_rng(1))
    save_store(tmp_path / "a", feats)
    save_store(tmp_path / "b", feats)
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_empty_store_refused(tmp_path):
    with pytest.raises(RainconceptsError):
        save_store(tmp_path / "s", [])


def test_inconsistent_dims_refused(tmp_path):
    feats = make_features(np.random.default_rng(2))
    feats.append(SegmentFeature(vector=np.zeros(5, dtype=np.float32),
                                timestamp=utc(2021, 7, 2), segment_id=1,
                                bbox=(0, 0, 1, 1), pixel_count=1))
    with pytest.raises(RainconceptsError):
        save_store(tmp_path / "s", feats)


def test_missing_file(tmp_path):
    with pytest.raises(MissingArtifactError):
        load_store(tmp_path / "nope.fstr")


def test_bad_magic(tmp_path):
    path = tmp_path / "bad"
    path.write_bytes(b"XXXX" + bytes(8))
    with pytest.raises(RainconceptsError):
        load_store(path)


def test_activation_state():
    feat = SegmentFeature(vector=np.array([-1.0, 0.0, 2.0], dtype=np.float32),
                          timestamp=utc(2021, 7, 1), segment_id=1,
                          bbox=(0, 0, 1, 1), pixel_count=1)
    assert list(feat.activation_state) == [False, False, True]
