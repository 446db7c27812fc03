import pytest

from rainconcepts.errors import MissingArtifactError, RainconceptsError
from rainconcepts.labels import (Concept, ConceptLabelSet, ConceptSource,
                                 load_labels, save_labels)


def sample_labels():
    labels = ConceptLabelSet(concepts={
        0: Concept(0, "convective", ConceptSource.SYNTH),
        1: Concept(1, "frontal_band", ConceptSource.WORKFLOW),
        2: Concept(2, "drizzle", ConceptSource.KMEANS),
    })
    labels.add((1_600_000_000, 1), 0)
    labels.add((1_600_000_000, 1), 1)
    labels.add((1_600_000_600, 2), 2)
    labels.add((1_600_001_200, 1), 0)
    return labels


def test_round_trip(tmp_path):
    labels = sample_labels()
    save_labels(tmp_path, labels)
    back = load_labels(tmp_path)
    assert back.concepts == labels.concepts
    assert back.assignments == labels.assignments


def test_unknown_concept_rejected():
    labels = sample_labels()
    with pytest.raises(RainconceptsError):
        labels.add((0, 0), 99)


def test_keys_for_sorted():
    labels = sample_labels()
    assert labels.keys_for(0) == [(1_600_000_000, 1), (1_600_001_200, 1)]


def test_positive_counts():
    counts = sample_labels().positive_counts()
    assert counts == {0: 2, 1: 1, 2: 1}


def test_missing_directory(tmp_path):
    with pytest.raises(MissingArtifactError):
        load_labels(tmp_path / "nope")
