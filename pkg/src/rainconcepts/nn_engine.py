"""Concept-gated nearest-neighbor search over the feature store.

The main path probes the query, takes the union of the top-k1 concepts'
principal components, and scans Euclidean distances over only those
coordinates. Full-space and PCA projections are kept as exact reference
baselines, plus a temporally weighted variant kept for comparison (off
by default).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import MissingArtifactError, RainconceptsError
from .features import FeatureStore, load_store
from .prober import ConceptProber, ProbeResult, load_bundle, probe_all
from .rdr import PrincipalComponentMap, load_map

DEFAULT_K1 = 3
DEFAULT_K2 = 3
TOP_CONCEPTS_SHOWN = 5
OVERFETCH_FACTOR = 4
DEFAULT_MIN_GAP = timedelta(days=30)
TIME_WEIGHT_EPS = 1e-8


@dataclass(frozen=True)
class Neighbor:
    row: int
    distance: float
    timestamp: datetime
    segment_id: int
    top_concepts: tuple[ProbeResult, ...]


@dataclass(frozen=True)
class NeighborResult:
    query_meta: dict
    neighbors: tuple[Neighbor, ...]
    concepts_used: tuple[int, ...] = ()
    query_concepts: tuple[ProbeResult, ...] = ()
    exhausted: bool = False  # temporal filter removed candidates below k2


@dataclass
class SearchIndex:
    store: FeatureStore
    pc_map: PrincipalComponentMap
    probers: list[ConceptProber]
    _pca_cache: dict = field(default_factory=dict, repr=False)

    def __len__(self) -> int:
        return len(self.store)


def _query_vector(query) -> np.ndarray:
    return np.asarray(getattr(query, "vector", query), dtype=np.float64).reshape(-1)


_CHUNK_ROWS = 1024


def euclidean_distances(x: np.ndarray, q: np.ndarray,
                        coords: np.ndarray | None = None) -> np.ndarray:
    """Row-wise Euclidean distances ||x_i - q|| in float64.

    Computed chunk-by-chunk from explicit differences (not the expanded
    quadratic form) so results are reproducible against a per-row
    reference summation regardless of matrix size.
    """
    q = np.asarray(q, dtype=np.float64)
    if coords is not None:
        q = q[coords]
    n = x.shape[0]
    out = np.empty(n, dtype=np.float64)
    for start in range(0, n, _CHUNK_ROWS):
        stop = min(start + _CHUNK_ROWS, n)
        chunk = x[start:stop, coords] if coords is not None else x[start:stop]
        # fancy indexing may return a Fortran-ordered array; the reduction
        # order (and thus the last ulp) depends on layout, so force C order
        diffs = np.ascontiguousarray(chunk, dtype=np.float64) - q
        out[start:stop] = (diffs * diffs).sum(axis=1)
    return np.sqrt(out)


def _query_meta(query) -> dict:
    meta = {}
    for attr in ("timestamp", "segment_id"):
        if hasattr(query, attr):
            meta[attr] = getattr(query, attr)
    return meta


def _rank(distances: np.ndarray, store: FeatureStore, k2: int) -> np.ndarray:
    if k2 > len(store):
        warnings.warn(f"k2={k2} exceeds index size {len(store)}; returning all",
                      stacklevel=3)
        k2 = len(store)
    order = np.lexsort((store.timestamps, distances))
    return order[:k2]


def _annotate(index: SearchIndex, rows: np.ndarray, distances: np.ndarray) -> tuple[Neighbor, ...]:
    out = []
    for r in rows:
        r = int(r)
        top = tuple(probe_all(index.probers, index.store.vectors[r])[:TOP_CONCEPTS_SHOWN])
        out.append(Neighbor(
            row=r,
            distance=float(distances[r]),
            timestamp=index.store.datetime_at(r),
            segment_id=int(index.store.segment_ids[r]),
            top_concepts=top,
        ))
    return tuple(out)


def search(index: SearchIndex, query, k1: int = DEFAULT_K1, k2: int = DEFAULT_K2) -> NeighborResult:
    """Concept-gated search: probe, gate, then reduced-coordinate scan."""
    if len(index) == 0:
        raise RainconceptsError("index is empty")
    if k1 < 1 or k2 < 1:
        raise RainconceptsError("k1 and k2 must be >= 1")
    q = _query_vector(query)
    ranked = probe_all(index.probers, q)
    gating = tuple(r.concept_id for r in ranked[:k1])
    coords = index.pc_map.union(gating)
    distances = euclidean_distances(index.store.vectors, q, coords)
    rows = _rank(distances, index.store, k2)
    return NeighborResult(
        query_meta=_query_meta(query),
        neighbors=_annotate(index, rows, distances),
        concepts_used=gating,
        query_concepts=tuple(ranked[:TOP_CONCEPTS_SHOWN]),
    )


def search_full(index: SearchIndex, query, k2: int = DEFAULT_K2) -> NeighborResult:
    """Exact scan over all coordinates (quality/runtime baseline)."""
    if len(index) == 0:
        raise RainconceptsError("index is empty")
    q = _query_vector(query)
    distances = euclidean_distances(index.store.vectors, q)
    rows = _rank(distances, index.store, k2)
    ranked = probe_all(index.probers, q) if index.probers else []
    return NeighborResult(
        query_meta=_query_meta(query),
        neighbors=_annotate(index, rows, distances) if index.probers else tuple(
            Neighbor(row=int(r), distance=float(distances[r]),
                     timestamp=index.store.datetime_at(int(r)),
                     segment_id=int(index.store.segment_ids[int(r)]),
                     top_concepts=()) for r in rows),
        query_concepts=tuple(ranked[:TOP_CONCEPTS_SHOWN]),
    )


def fit_pca_projection(x: np.ndarray, d: int, seed: int = 0, iterations: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Leading principal axes of the centered matrix via block power iteration.

    Returns (mean, components) with components of shape (dim, d).
    """
    x = np.asarray(x, dtype=np.float64)
    n, dim = x.shape
    if d > dim:
        raise RainconceptsError(f"d={d} exceeds dim={dim}")
    mean = x.mean(axis=0)
    xc = x - mean
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((dim, d))
    v, _ = np.linalg.qr(v)
    for _ in range(iterations):
        v = xc.T @ (xc @ v)
        v, _ = np.linalg.qr(v)
    return mean, v


def search_pca(index: SearchIndex, query, k2: int = DEFAULT_K2, d: int = 300) -> NeighborResult:
    """Distance scan in a d-dimensional PCA projection fitted on the index."""
    if len(index) == 0:
        raise RainconceptsError("index is empty")
    cached = index._pca_cache.get(d)
    if cached is None:
        mean, comps = fit_pca_projection(index.store.vectors, d)
        projected = (index.store.vectors - mean) @ comps
        cached = (mean, comps, projected)
        index._pca_cache[d] = cached
    mean, comps, projected = cached
    q = (_query_vector(query) - mean) @ comps
    distances = euclidean_distances(projected, q)
    rows = _rank(distances, index.store, k2)
    return NeighborResult(query_meta=_query_meta(query),
                          neighbors=_annotate(index, rows, distances))


def temporal_filter(result: NeighborResult, query_time: datetime,
                    min_gap: timedelta = DEFAULT_MIN_GAP,
                    k2: int | None = None) -> NeighborResult:
    """Drop neighbors temporally closer than ``min_gap`` to the query."""
    if min_gap < timedelta(0):
        raise RainconceptsError("min_gap must be >= 0")
    kept = tuple(n for n in result.neighbors
                 if abs(n.timestamp - query_time) >= min_gap)
    if k2 is not None:
        exhausted = len(kept) < k2
        kept = kept[:k2]
    else:
        exhausted = len(kept) == 0 and len(result.neighbors) > 0
    return NeighborResult(query_meta=result.query_meta, neighbors=kept,
                          concepts_used=result.concepts_used,
                          query_concepts=result.query_concepts,
                          exhausted=exhausted)


def search_filtered(index: SearchIndex, query, query_time: datetime,
                    k1: int = DEFAULT_K1, k2: int = DEFAULT_K2,
                    min_gap: timedelta = DEFAULT_MIN_GAP) -> NeighborResult:
    """Search with temporal post-filtering; over-fetches 4*k2 candidates so
    the filtered list still reaches k2 when enough candidates exist."""
    raw = search(index, query, k1=k1, k2=min(OVERFETCH_FACTOR * k2, len(index)))
    return temporal_filter(raw, query_time, min_gap=min_gap, k2=k2)


def search_time_weighted(index: SearchIndex, query, query_time: datetime,
                         k2: int = DEFAULT_K2) -> NeighborResult:
    """Full-space distances scaled by w = 1/(eps + |dt_hours|)^2.

    Kept as an evaluated-and-rejected alternative; not used by default.
    """
    if len(index) == 0:
        raise RainconceptsError("index is empty")
    q = _query_vector(query)
    distances = euclidean_distances(index.store.vectors, q)
    qt = int(query_time.timestamp())
    dt_hours = np.abs(index.store.timestamps - qt) / 3600.0
    weighted = distances / (TIME_WEIGHT_EPS + dt_hours) ** 2
    rows = _rank(weighted, index.store, k2)
    return NeighborResult(query_meta=_query_meta(query),
                          neighbors=_annotate(index, rows, weighted))


# --- index manifest -------------------------------------------------------

def save_index(path: Path, store_path: Path, pc_map_path: Path, probers_path: Path) -> None:
    manifest = {
        "format": "rainconcepts-index-v1",
        "store": str(store_path),
        "pc_map": str(pc_map_path),
        "probers": str(probers_path),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_index(path: Path) -> SearchIndex:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"index manifest not found: {path}")
    with open(path) as fh:
        manifest = json.load(fh)
    base = path.parent
    def _resolve(p):
        p = Path(p)
        return p if p.is_absolute() else base / p
    return SearchIndex(
        store=load_store(_resolve(manifest["store"])),
        pc_map=load_map(_resolve(manifest["pc_map"])),
        probers=load_bundle(_resolve(manifest["probers"])),
    )
