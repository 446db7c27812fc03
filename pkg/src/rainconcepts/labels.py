"""Concept label sets and their CSV formats.

Assignment CSV: header ``timestamp,segment_id,concept_id`` (ISO-8601 UTC
timestamps). Dictionary CSV: header ``concept_id,name,source``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path

from .errors import MissingArtifactError, RainconceptsError


class ConceptSource(Enum):
    POSTHOC = "POSTHOC"
    WORKFLOW = "WORKFLOW"
    KMEANS = "KMEANS"
    GMM = "GMM"
    SOM = "SOM"
    SYNTH = "SYNTH"


@dataclass(frozen=True)
class Concept:
    concept_id: int
    name: str
    source: ConceptSource = ConceptSource.SYNTH


SegmentKey = tuple[int, int]  # (unix timestamp, segment id)


@dataclass
class ConceptLabelSet:
    concepts: dict[int, Concept] = field(default_factory=dict)
    assignments: dict[SegmentKey, set[int]] = field(default_factory=dict)

    def add(self, key: SegmentKey, concept_id: int) -> None:
        if concept_id not in self.concepts:
            raise RainconceptsError(f"unknown concept id {concept_id}")
        self.assignments.setdefault(key, set()).add(concept_id)

    def keys_for(self, concept_id: int) -> list[SegmentKey]:
        return sorted(k for k, ids in self.assignments.items() if concept_id in ids)

    def positive_counts(self) -> dict[int, int]:
        counts = {cid: 0 for cid in self.concepts}
        for ids in self.assignments.values():
            for cid in ids:
                counts[cid] += 1
        return counts


def _parse_ts(text: str) -> int:
    dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return int(dt.timestamp())


def save_labels(directory: Path, labels: ConceptLabelSet) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / "concepts.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["concept_id", "name", "source"])
        for cid in sorted(labels.concepts):
            c = labels.concepts[cid]
            writer.writerow([c.concept_id, c.name, c.source.value])
    with open(directory / "labels.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["timestamp", "segment_id", "concept_id"])
        for (ts, seg) in sorted(labels.assignments):
            iso = datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()
            for cid in sorted(labels.assignments[(ts, seg)]):
                writer.writerow([iso, seg, cid])


def load_labels(directory: Path) -> ConceptLabelSet:
    directory = Path(directory)
    dict_path = directory / "concepts.csv"
    assign_path = directory / "labels.csv"
    if not dict_path.exists() or not assign_path.exists():
        raise MissingArtifactError(f"label files not found under {directory}")
    labels = ConceptLabelSet()
    with open(dict_path, newline="") as fh:
        for row in csv.DictReader(fh):
            cid = int(row["concept_id"])
            labels.concepts[cid] = Concept(
                concept_id=cid, name=row["name"],
                source=ConceptSource(row["source"]),
            )
    with open(assign_path, newline="") as fh:
        for row in csv.DictReader(fh):
            key = (_parse_ts(row["timestamp"]), int(row["segment_id"]))
            labels.add(key, int(row["concept_id"]))
    return labels
