"""Synthetic retrieval benchmarks: runtime and precision@k per method.

The corpus plants concept clusters in activation space: each concept
owns a block of signature coordinates that its members activate far more
often than background noise does, so concept-aligned dimensionality
reduction keeps retrieval quality while shrinking the scan.
"""

from __future__ import annotations

import json
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import RainconceptsError
from .features import FeatureStore
from .metrics import precision_at_k
from .nn_engine import SearchIndex, search, search_full, search_pca
from .prober import ProberTrainConfig, train_prober
from .rdr import PrincipalComponentMap, select_components


@dataclass
class BenchConfig:
    n_samples: int = 2000
    n_queries: int = 30
    dim: int = 2400
    n_concepts: int = 6
    signature_coords: int = 300
    dims: tuple[int, ...] = (15, 100, 300)
    methods: tuple[str, ...] = ("full", "pca", "pcnse")
    train_per_concept: int = 60
    seed: int = 42
    threads: int = 0
    timing_queries: int = 20


@dataclass(frozen=True)
class BenchRow:
    method: str
    dims: int
    runtime_s: float
    p3: tuple[float, float]  # mean, std
    p5: tuple[float, float]
    p10: tuple[float, float]


@dataclass(frozen=True)
class BenchReport:
    rows: tuple[BenchRow, ...]
    environment: str
    seed: int

    def to_markdown(self) -> str:
        lines = [
            "| Method | #Dim | Runtime(s/query) | P@3 | P@5 | P@10 |",
            "|---|---|---|---|---|---|",
        ]
        for r in self.rows:
            lines.append(
                f"| {r.method} | {r.dims} | {r.runtime_s:.4f} "
                f"| {r.p3[0]:.3f} ± {r.p3[1]:.3f} "
                f"| {r.p5[0]:.3f} ± {r.p5[1]:.3f} "
                f"| {r.p10[0]:.3f} ± {r.p10[1]:.3f} |")
        lines.append("")
        lines.append(f"Environment: {self.environment}; seed {self.seed}")
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({
            "environment": self.environment,
            "seed": self.seed,
            "rows": [
                {"method": r.method, "dims": r.dims, "runtime_s": r.runtime_s,
                 "p3": list(r.p3), "p5": list(r.p5), "p10": list(r.p10)}
                for r in self.rows
            ],
        }, indent=1)


def describe_environment(threads: int = 0) -> str:
    cpu = platform.processor() or platform.machine()
    try:
        with open("/proc/cpuinfo") as fh:
            for line in fh:
                if line.startswith("model name"):
                    cpu = line.split(":", 1)[1].strip()
                    break
    except OSError:
        pass
    cores = os.cpu_count()
    used = threads if threads > 0 else cores
    return f"{cpu}, {cores} logical cores ({used} used)"


@dataclass
class SyntheticCorpus:
    vectors: np.ndarray        # (N, dim) float32
    labels: np.ndarray         # (N,) concept ids
    queries: np.ndarray        # (Q, dim)
    query_labels: np.ndarray   # (Q,)
    signature: dict[int, np.ndarray] = field(default_factory=dict)


def make_corpus(cfg: BenchConfig, seed: int | None = None) -> SyntheticCorpus:
    """Seeded activation-sparse corpus with planted concept signatures."""
    rng = np.random.default_rng(cfg.seed if seed is None else seed)
    dim = cfg.dim
    c = cfg.n_concepts
    sig = cfg.signature_coords
    if c * sig > dim:
        raise RainconceptsError("signature blocks exceed the total dimension")
    signature = {k: np.arange(k * sig, (k + 1) * sig) for k in range(c)}

    total = cfg.n_samples + cfg.n_queries

    labels = rng.integers(0, c, total)
    x = np.zeros((total, dim), dtype=np.float32)
    chunk = 1024  # bounds the temporary random masks
    for start in range(0, total, chunk):
        stop = min(start + chunk, total)
        rows = stop - start
        noise_active = rng.random((rows, dim), dtype=np.float32) < 0.45
        block_x = x[start:stop]
        block_x[noise_active] = rng.exponential(
            1.0, int(noise_active.sum())).astype(np.float32)
        for k in range(c):
            members = np.nonzero(labels[start:stop] == k)[0]
            if members.size == 0:
                continue
            coords = signature[k]
            active = rng.random((members.size, sig), dtype=np.float32) < 0.6
            vals = (0.3 + rng.exponential(0.8, (members.size, sig))).astype(np.float32)
            sub = block_x[np.ix_(members, coords)]
            sub[active] = vals[active]
            block_x[np.ix_(members, coords)] = sub
    return SyntheticCorpus(
        vectors=x[:cfg.n_samples],
        labels=labels[:cfg.n_samples],
        queries=x[cfg.n_samples:],
        query_labels=labels[cfg.n_samples:],
        signature=signature,
    )


def _train_bench_probers(corpus: SyntheticCorpus, cfg: BenchConfig, rng):
    probers = []
    pos_neg = {}
    train_cfg = ProberTrainConfig(epochs=8, seed=cfg.seed)
    for k in sorted(corpus.signature):
        pos_idx = np.nonzero(corpus.labels == k)[0][:cfg.train_per_concept]
        neg_pool = np.nonzero(corpus.labels != k)[0]
        neg_idx = rng.choice(neg_pool, size=len(pos_idx), replace=False)
        x = np.concatenate([corpus.vectors[pos_idx], corpus.vectors[neg_idx]])
        y = np.concatenate([np.ones(len(pos_idx)), np.zeros(len(neg_idx))])
        probers.append(train_prober(x, y, concept_id=k, config=train_cfg))
        pos_neg[k] = (corpus.vectors[pos_idx], corpus.vectors[neg_idx])
    return probers, pos_neg


def _pc_map_for(pos_neg, d: int, dim: int) -> PrincipalComponentMap:
    per_concept = {
        k: select_components(pos, neg, d=min(d, dim))
        for k, (pos, neg) in pos_neg.items()
    }
    return PrincipalComponentMap(per_concept=per_concept, d=min(d, dim))


def _store_from(corpus: SyntheticCorpus) -> FeatureStore:
    n = len(corpus.vectors)
    # hourly spacing so every sample is temporally distinct
    timestamps = np.int64(1_600_000_000) + 3600 * np.arange(n, dtype=np.int64)
    zeros = np.zeros((n, 4), dtype=np.uint32)
    return FeatureStore(vectors=corpus.vectors, timestamps=timestamps,
                        segment_ids=np.arange(n, dtype=np.uint32),
                        bboxes=zeros, pixel_counts=zeros[:, 0])


def run_benchmark(cfg: BenchConfig, corpus: SyntheticCorpus | None = None) -> BenchReport:
    """Time each retrieval method and score P@{3,5,10} on planted labels."""
    rng = np.random.default_rng(cfg.seed)
    corpus = corpus or make_corpus(cfg)
    probers, pos_neg = _train_bench_probers(corpus, cfg, rng)
    store = _store_from(corpus)

    queries = corpus.queries[:cfg.timing_queries]
    qlabels = corpus.query_labels[:cfg.timing_queries]

    def evaluate(run):
        times = []
        precisions = {3: [], 5: [], 10: []}
        run(queries[0])  # warm cache
        for q, ql in zip(queries, qlabels):
            t0 = time.perf_counter()
            result = run(q)
            times.append(time.perf_counter() - t0)
            retrieved = [int(corpus.labels[n.row]) for n in result.neighbors]
            for k in precisions:
                precisions[k].append(precision_at_k(retrieved, int(ql), k))
        stats = {k: (float(np.mean(v)), float(np.std(v)))
                 for k, v in precisions.items()}
        return float(np.median(times)), stats

    rows = []
    if "full" in cfg.methods:
        index = SearchIndex(store=store, pc_map=_pc_map_for(pos_neg, 1, cfg.dim),
                            probers=probers)
        runtime, stats = evaluate(lambda q: search_full(index, q, k2=10))
        rows.append(BenchRow("full", cfg.dim, runtime,
                             stats[3], stats[5], stats[10]))
    if "pca" in cfg.methods:
        index = SearchIndex(store=store, pc_map=_pc_map_for(pos_neg, 1, cfg.dim),
                            probers=probers)
        for d in cfg.dims:
            runtime, stats = evaluate(lambda q: search_pca(index, q, k2=10, d=d))
            rows.append(BenchRow("pca", d, runtime, stats[3], stats[5], stats[10]))
    if "pcnse" in cfg.methods:
        for d in cfg.dims:
            index = SearchIndex(store=store, pc_map=_pc_map_for(pos_neg, d, cfg.dim),
                                probers=probers)
            runtime, stats = evaluate(
                lambda q: search(index, q, k1=3, k2=10))
            rows.append(BenchRow("pcnse", d, runtime, stats[3], stats[5], stats[10]))

    return BenchReport(rows=tuple(rows),
                       environment=describe_environment(cfg.threads),
                       seed=cfg.seed)
