"""Binary feature store: flattened segment features with provenance.

Layout (little-endian): magic ``FSTR``, u32 record count, u32 dim, then
per record i64 unix timestamp, u32 segment id, 4x u32 bbox, f32[dim].
See docs/formats.md.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import MissingArtifactError, RainconceptsError
from .model import SegmentFeature

MAGIC = b"FSTR"
_HEADER = struct.Struct("<4sII")
_META = struct.Struct("<qI4I")


@dataclass(frozen=True)
class FeatureStore:
    """In-memory view of a feature store file."""

    vectors: np.ndarray       # (N, dim) float32
    timestamps: np.ndarray    # (N,) int64 unix seconds
    segment_ids: np.ndarray   # (N,) uint32
    bboxes: np.ndarray        # (N, 4) uint32
    pixel_counts: np.ndarray  # (N,) uint32  (bbox area is kept separately)

    def __len__(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def key(self, i: int) -> tuple[int, int]:
        return int(self.timestamps[i]), int(self.segment_ids[i])

    def datetime_at(self, i: int) -> datetime:
        return datetime.fromtimestamp(int(self.timestamps[i]), tz=timezone.utc)


def save_store(path: Path, features: list[SegmentFeature]) -> None:
    if not features:
        raise RainconceptsError("refusing to write an empty feature store")
    dim = features[0].vector.size
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, len(features), dim))
        for f in features:
            if f.vector.size != dim:
                raise RainconceptsError("inconsistent feature dimensions in store")
            ts = int(f.timestamp.timestamp())
            fh.write(_META.pack(ts, f.segment_id, *f.bbox))
            fh.write(np.asarray(f.vector, dtype="<f4").tobytes())


def load_store(path: Path) -> FeatureStore:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"feature store not found: {path}")
    data = path.read_bytes()
    magic, count, dim = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise RainconceptsError(f"{path}: bad magic {magic!r}")
    vectors = np.empty((count, dim), dtype=np.float32)
    timestamps = np.empty(count, dtype=np.int64)
    segment_ids = np.empty(count, dtype=np.uint32)
    bboxes = np.empty((count, 4), dtype=np.uint32)
    off = _HEADER.size
    for i in range(count):
        ts, seg, b0, b1, b2, b3 = _META.unpack_from(data, off)
        off += _META.size
        vectors[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=off)
        off += 4 * dim
        timestamps[i] = ts
        segment_ids[i] = seg
        bboxes[i] = (b0, b1, b2, b3)
    pixel_counts = ((bboxes[:, 2] - bboxes[:, 0]) * (bboxes[:, 3] - bboxes[:, 1]))
    return FeatureStore(vectors=vectors, timestamps=timestamps,
                        segment_ids=segment_ids, bboxes=bboxes,
                        pixel_counts=pixel_counts.astype(np.uint32))
