"""Principal neuron component selection per concept.

Coordinates are scored by how discriminatively their activation state
differs from the average negative activation state; the top-d scores
become a concept's principal components.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

from pathlib import Path

import numpy as np

from .errors import MissingArtifactError, RainconceptsError, SkipConcept
from .features import FeatureStore
from .labels import ConceptLabelSet
from .prober import build_binary_dataset

DEFAULT_COMPONENTS = 300
PCMAP_MAGIC = b"PCMP"


@dataclass(frozen=True)
class PrincipalComponentMap:
    per_concept: dict[int, tuple[int, ...]]
    d: int

    def union(self, concept_ids) -> np.ndarray:
        idx: set[int] = set()
        for cid in concept_ids:
            idx.update(self.per_concept[cid])
        return np.array(sorted(idx), dtype=np.int64)


def _as_matrix(samples) -> np.ndarray:
    if isinstance(samples, np.ndarray):
        return samples
    return np.stack([np.asarray(getattr(s, "vector", s)) for s in samples])


def negative_vector(negatives, activation_threshold: float = 0.0) -> np.ndarray:
    """Per-coordinate fraction of negative samples activating (> threshold)."""
    mat = _as_matrix(negatives)
    if mat.size == 0:
        raise RainconceptsError("negative set is empty")
    return (mat > activation_threshold).mean(axis=0)


def select_components(
    positives,
    negatives,
    d: int = DEFAULT_COMPONENTS,
    activation_threshold: float = 0.0,
) -> tuple[int, ...]:
    """Indices of the d most discriminative coordinates for one concept.

    score_i = mean over positives of |1[x_i > thr] - negvec_i|; ties break
    toward the lower index.
    """
    if d < 1:
        raise RainconceptsError("d must be >= 1")
    pos = _as_matrix(positives)
    if pos.size == 0:
        raise RainconceptsError("positive set is empty")
    negvec = negative_vector(negatives, activation_threshold)
    score = np.abs((pos > activation_threshold).astype(np.float64) - negvec).mean(axis=0)
    dim = score.size
    if d > dim:
        warnings.warn(f"d={d} exceeds dim={dim}; clamping", stacklevel=2)
        d = dim
    order = np.lexsort((np.arange(dim), -score))
    return tuple(int(i) for i in sorted(order[:d]))


def build_map(
    labels: ConceptLabelSet,
    store: FeatureStore,
    concept_ids,
    d: int = DEFAULT_COMPONENTS,
    min_samples: int = 20,
    activation_threshold: float = 0.0,
) -> PrincipalComponentMap:
    """Select components per concept from its one-vs-all dataset."""
    per_concept: dict[int, tuple[int, ...]] = {}
    for cid in sorted(concept_ids):
        try:
            ds = build_binary_dataset(labels, cid, store, min_samples=min_samples)
        except SkipConcept:
            raise
        per_concept[cid] = select_components(
            store.vectors[ds.positive_rows],
            store.vectors[ds.negative_rows],
            d=d,
            activation_threshold=activation_threshold,
        )
    actual = min(d, store.dim)
    return PrincipalComponentMap(per_concept=per_concept, d=actual)


def save_map(path: Path, pc_map: PrincipalComponentMap) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<4sII", PCMAP_MAGIC, len(pc_map.per_concept), pc_map.d))
        for cid in sorted(pc_map.per_concept):
            idx = pc_map.per_concept[cid]
            if len(idx) != pc_map.d:
                raise RainconceptsError("index list length must equal map d")
            fh.write(struct.pack("<I", cid))
            fh.write(np.asarray(idx, dtype="<u4").tobytes())


def load_map(path: Path) -> PrincipalComponentMap:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"PC map not found: {path}")
    data = path.read_bytes()
    magic, count, d = struct.unpack_from("<4sII", data)
    if magic != PCMAP_MAGIC:
        raise RainconceptsError(f"{path}: bad magic {magic!r}")
    off = 12
    per_concept = {}
    for _ in range(count):
        (cid,) = struct.unpack_from("<I", data, off)
        off += 4
        idx = np.frombuffer(data, dtype="<u4", count=d, offset=off)
        off += 4 * d
        per_concept[cid] = tuple(int(i) for i in idx)
    return PrincipalComponentMap(per_concept=per_concept, d=d)
