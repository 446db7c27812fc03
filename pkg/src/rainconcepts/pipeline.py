"""Batch pipeline stages wiring the modules together.

Each stage reads and writes artifacts under the config root so every
step is independently re-runnable; reruns with unchanged inputs produce
byte-identical outputs.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from . import radar_io
from .config import PipelineConfig
from .errors import MissingArtifactError, SkipConcept
from .features import FeatureStore, load_store, save_store
from .labels import Concept, ConceptLabelSet, ConceptSource, load_labels, save_labels
from .model import (ChannelPruneMap, FeatureMap, SegmentFeature, ToyModel,
                    ToyModelConfig, compute_prune_map, extract_segment_feature)
from .nn_engine import (NeighborResult, SearchIndex, load_index, save_index,
                        search_filtered)
from .preprocess import (RadarFrame, SegmentMask, assemble_input, downsample,
                         watershed_segments)
from .prober import (ConceptProber, ProberTrainConfig, build_binary_dataset,
                     save_bundle, train_prober)
from .rdr import build_map, save_map


def model_config_for(cfg: PipelineConfig) -> ToyModelConfig:
    size = cfg.grid_size // 2  # after the factor-2 max-pool downsample
    return ToyModelConfig(input_size=(size, size), seed=cfg.seed)


def gen_data(cfg: PipelineConfig) -> dict:
    """Synthetic radar sequence plus seeded toy-model weights."""
    syn = radar_io.SyntheticConfig(
        grid_size=cfg.grid_size, n_frames=cfg.n_frames,
        cells_per_frame=cfg.cells_per_frame, seed=cfg.seed)
    paths = radar_io.generate_dataset(cfg.raw_dir, syn)
    cfg.weights_path.parent.mkdir(parents=True, exist_ok=True)
    ToyModel.create(model_config_for(cfg)).save_weights(cfg.weights_path)
    return {"frames": len(paths), "weights": str(cfg.weights_path)}


def save_prune(path: Path, prune: ChannelPruneMap) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        json.dump({"active_indices": list(prune.active_indices),
                   "total_channels": prune.total_channels}, fh)
        fh.write("\n")


def load_prune(path: Path) -> ChannelPruneMap:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"prune map not found: {path}")
    with open(path) as fh:
        data = json.load(fh)
    return ChannelPruneMap(active_indices=tuple(data["active_indices"]),
                           total_channels=data["total_channels"])


def load_frames(cfg: PipelineConfig) -> dict[datetime, RadarFrame]:
    files = radar_io.list_frame_files(cfg.raw_dir)
    if not files:
        raise MissingArtifactError(f"no raw frames under {cfg.raw_dir}")
    frames = {}
    for path in files:
        frame = downsample(radar_io.read_frame(path), 2)
        frames[frame.timestamp] = frame
    return frames


def segment_frame(cfg: PipelineConfig, frame: RadarFrame) -> SegmentMask:
    return watershed_segments(frame, rain_threshold=cfg.rain_threshold,
                              min_pixels=cfg.min_segment_pixels)


def _labels_from_cells(cfg: PipelineConfig, mask: SegmentMask,
                       cells: list[dict], labels: ConceptLabelSet) -> None:
    """Assign each segment the mechanisms of cells landing inside it."""
    ts = int(mask.frame_time.timestamp())
    for seg in mask.segments:
        assigned = set()
        centroid = None
        rows, cols = np.nonzero(mask.label_grid == seg.segment_id)
        centroid = (rows.mean(), cols.mean())
        best = None
        for cell in cells:
            r, c = cell["row"] / 2.0, cell["col"] / 2.0  # raw -> downsampled
            ri, ci = int(round(r)), int(round(c))
            h, w = mask.label_grid.shape
            if 0 <= ri < h and 0 <= ci < w and mask.label_grid[ri, ci] == seg.segment_id:
                assigned.add(cell["mechanism"])
            dist = (r - centroid[0]) ** 2 + (c - centroid[1]) ** 2
            if best is None or dist < best[0]:
                best = (dist, cell["mechanism"])
        if not assigned and best is not None:
            assigned.add(best[1])
        for mech in assigned:
            labels.add((ts, seg.segment_id), mech)


def extract(cfg: PipelineConfig) -> dict:
    """Encode all reference times, prune channels, extract segment features,
    and derive synthetic concept labels from the generator's cell truth."""
    frames = load_frames(cfg)
    model = ToyModel.load_weights(cfg.weights_path, model_config_for(cfg))
    times = sorted(frames)
    step = timedelta(minutes=10)

    encoded: list[tuple[datetime, FeatureMap, SegmentMask]] = []
    for t in times:
        history = [t - i * step for i in range(6, -1, -1)]
        if not all(h in frames for h in history):
            continue
        model_input = assemble_input([frames[h] for h in history], t)
        feature = model.encode(model_input)
        mask = segment_frame(cfg, frames[t])
        encoded.append((t, feature, mask))

    prune = compute_prune_map(fm for _, fm, _ in encoded)

    cell_truth = radar_io.load_cell_truth(cfg.raw_dir)
    labels = ConceptLabelSet(concepts={
        i: Concept(concept_id=i, name=name, source=ConceptSource.SYNTH)
        for i, (name, _, _) in enumerate(radar_io.MECHANISMS)
    })
    segment_features: list[SegmentFeature] = []
    for t, feature, mask in encoded:
        for seg in mask.segments:
            segment_features.append(
                extract_segment_feature(feature, mask, seg.segment_id, prune))
        _labels_from_cells(cfg, mask, cell_truth.get(t.isoformat(), []), labels)

    cfg.store_path.parent.mkdir(parents=True, exist_ok=True)
    save_store(cfg.store_path, segment_features)
    save_prune(cfg.prune_path, prune)
    save_labels(cfg.labels_dir, labels)
    return {
        "reference_times": len(encoded),
        "segments": len(segment_features),
        "active_channels": len(prune.active_indices),
        "dim": segment_features[0].vector.size if segment_features else 0,
    }


def train_probers(cfg: PipelineConfig) -> dict:
    store = load_store(cfg.store_path)
    labels = load_labels(cfg.labels_dir)
    train_cfg = ProberTrainConfig(l1_lambda=cfg.l1_lambda, epochs=cfg.epochs,
                                  seed=cfg.seed, min_samples=cfg.min_samples)
    probers: list[ConceptProber] = []
    skipped: dict[int, int] = {}
    for cid in sorted(labels.concepts):
        try:
            ds = build_binary_dataset(labels, cid, store,
                                      min_samples=cfg.min_samples, seed=cfg.seed)
        except SkipConcept as exc:
            skipped[cid] = exc.n_positives
            continue
        probers.append(train_prober(ds.x_train, ds.y_train, concept_id=cid,
                                    config=train_cfg))
    if not probers:
        raise MissingArtifactError("no trainable concepts")
    cfg.probers_path.parent.mkdir(parents=True, exist_ok=True)
    save_bundle(cfg.probers_path, probers)
    return {"trained": [p.concept_id for p in probers], "skipped": skipped}


def build_pc(cfg: PipelineConfig) -> dict:
    store = load_store(cfg.store_path)
    labels = load_labels(cfg.labels_dir)
    from .prober import load_bundle
    probers = load_bundle(cfg.probers_path)
    pc_map = build_map(labels, store, [p.concept_id for p in probers],
                       d=cfg.d, min_samples=cfg.min_samples)
    cfg.pcmap_path.parent.mkdir(parents=True, exist_ok=True)
    save_map(cfg.pcmap_path, pc_map)
    return {"concepts": len(pc_map.per_concept), "d": pc_map.d}


def build_index(cfg: PipelineConfig) -> dict:
    for path, kind in ((cfg.store_path, "feature store"),
                       (cfg.pcmap_path, "PC map"),
                       (cfg.probers_path, "prober bundle")):
        if not path.exists():
            raise MissingArtifactError(f"{kind} not found: {path}")
    cfg.index_path.parent.mkdir(parents=True, exist_ok=True)
    # store paths relative to the manifest so the root is relocatable
    base = cfg.index_path.parent
    save_index(cfg.index_path,
               Path(os.path.relpath(cfg.store_path, base)),
               Path(os.path.relpath(cfg.pcmap_path, base)),
               Path(os.path.relpath(cfg.probers_path, base)))
    return {"index": str(cfg.index_path), "rows": len(load_store(cfg.store_path))}


def open_index(cfg: PipelineConfig) -> SearchIndex:
    return load_index(cfg.index_path)


def query_segment(cfg: PipelineConfig, index: SearchIndex, time: datetime,
                  segment_id: int, k1: int | None = None, k2: int | None = None,
                  min_gap_days: float | None = None) -> NeighborResult:
    ts = int(time.timestamp())
    rows = np.nonzero((index.store.timestamps == ts)
                      & (index.store.segment_ids == segment_id))[0]
    if rows.size == 0:
        raise MissingArtifactError(
            f"segment {segment_id} at {time.isoformat()} not in the index")
    query = index.store.vectors[int(rows[0])]
    q = SegmentFeature(vector=query, timestamp=time, segment_id=segment_id,
                       bbox=tuple(int(v) for v in index.store.bboxes[int(rows[0])]),
                       pixel_count=int(index.store.pixel_counts[int(rows[0])]))
    gap = timedelta(days=cfg.min_gap_days if min_gap_days is None else min_gap_days)
    return search_filtered(index, q, time, k1=k1 or cfg.k1, k2=k2 or cfg.k2,
                           min_gap=gap)


def importance_inputs(cfg: PipelineConfig, limit: int | None = None) -> list:
    """(FeatureMap, truth class map) pairs for the importance report."""
    from .preprocess import rain_to_class

    frames = load_frames(cfg)
    model = ToyModel.load_weights(cfg.weights_path, model_config_for(cfg))
    step = timedelta(minutes=10)
    dataset = []
    for t in sorted(frames):
        history = [t - i * step for i in range(6, -1, -1)]
        if not all(h in frames for h in history):
            continue
        dataset.append((model.encode(assemble_input([frames[h] for h in history], t)),
                        rain_to_class(frames[t].grid)))
        if limit is not None and len(dataset) >= limit:
            break
    return dataset


def run_importance(cfg: PipelineConfig, wrapper: str,
                   limit: int | None = 24, epsilon: float | None = None):
    """Build and persist the concept-importance report for one wrapper."""
    from .attribution import WrapperKind, importance_report
    from .prober import load_bundle

    kind = WrapperKind(wrapper)
    model = ToyModel.load_weights(cfg.weights_path, model_config_for(cfg))
    prune = load_prune(cfg.prune_path)
    probers = load_bundle(cfg.probers_path)
    labels = load_labels(cfg.labels_dir)
    dataset = importance_inputs(cfg, limit=limit)
    if not dataset:
        raise MissingArtifactError("no frames with full history for importance")
    report = importance_report(
        model, dataset, probers, classes=range(model.config.num_classes),
        wrapper=kind, prune=prune,
        concept_names={c.concept_id: c.name for c in labels.concepts.values()},
        epsilon=cfg.epsilon if epsilon is None else epsilon)
    cfg.reports_dir.mkdir(parents=True, exist_ok=True)
    (cfg.reports_dir / f"importance_{kind.value}.json").write_text(
        report.to_json() + "\n")
    report.write_csv(cfg.reports_dir / f"importance_{kind.value}.csv")
    return report


def run_perturb(cfg: PipelineConfig, time: datetime, concept_id: int,
                alphas: list[float]) -> dict:
    """Argmax class maps before/after shifting along one concept's CAV."""
    from .attribution import lift_cav, perturb_prediction
    from .prober import load_bundle

    frames = load_frames(cfg)
    model = ToyModel.load_weights(cfg.weights_path, model_config_for(cfg))
    prune = load_prune(cfg.prune_path)
    probers = {p.concept_id: p for p in load_bundle(cfg.probers_path)}
    if concept_id not in probers:
        raise MissingArtifactError(f"no prober for concept {concept_id}")
    step = timedelta(minutes=10)
    history = [time - i * step for i in range(6, -1, -1)]
    if not all(h in frames for h in history):
        raise MissingArtifactError(f"missing frames for {time.isoformat()}")
    feature = model.encode(assemble_input([frames[h] for h in history], time))
    cav = lift_cav(probers[concept_id], prune, model.config.bottleneck_shape)
    baseline, _ = perturb_prediction(model, feature, cav, 0.0)
    out = {"time": time.isoformat(), "concept_id": concept_id,
           "baseline": baseline.astype(int).tolist(), "perturbed": {}}
    for a in alphas:
        _, p = perturb_prediction(model, feature, cav, float(a))
        out["perturbed"][str(a)] = p.astype(int).tolist()
    return out


def neighbor_result_to_dict(result: NeighborResult) -> dict:
    def _probe(p):
        return {"concept_id": p.concept_id,
                "probability": round(p.probability, 6),
                "uncertainty": round(p.uncertainty, 8)}

    meta = dict(result.query_meta)
    if isinstance(meta.get("timestamp"), datetime):
        meta["timestamp"] = meta["timestamp"].isoformat()
    return {
        "query": meta,
        "concepts_used": list(result.concepts_used),
        "query_concepts": [_probe(p) for p in result.query_concepts],
        "exhausted": result.exhausted,
        "neighbors": [
            {
                "row": n.row,
                "distance": round(n.distance, 6),
                "timestamp": n.timestamp.isoformat(),
                "segment_id": n.segment_id,
                "top_concepts": [_probe(p) for p in n.top_concepts],
            }
            for n in result.neighbors
        ],
    }
