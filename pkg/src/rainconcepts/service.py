"""HTTP facade over the pipeline artifacts (backend of the explorer UI).

All endpoints live under ``/api/v1``. Rasters travel as base64-encoded
little-endian float32; the search log is append-only newline-delimited
JSON with an fsync per append.
"""

from __future__ import annotations

import base64
import json
import os
import threading
import time
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from . import pipeline
from .attribution import lift_cav, perturb_prediction
from .config import PipelineConfig
from .errors import MissingArtifactError, RainconceptsError
from .labels import load_labels
from .model import ToyModel
from .preprocess import assemble_input

API_PREFIX = "/api/v1"


class SearchLog:
    """Append-only NDJSON log; single writer behind a lock."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._next_id = len(self.entries()) + 1

    def entries(self) -> list[dict]:
        if not self.path.exists():
            return []
        out = []
        with open(self.path) as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                try:
                    out.append(json.loads(line))
                except json.JSONDecodeError:
                    break  # torn tail from a crash; keep the valid prefix
        return out

    def append(self, query_time: str, status: str, message: str,
               latency_ms: float) -> dict:
        with self._lock:
            entry = {
                "id": self._next_id,
                "wall_time": datetime.now(timezone.utc).isoformat(),
                "query_time": query_time,
                "status": status,
                "message": message,
                "latency_ms": round(latency_ms, 3),
            }
            self._next_id += 1
            with open(self.path, "a") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            return entry


class QueryRequest(BaseModel):
    time: str
    segment_id: int
    k1: int | None = None
    k2: int | None = None
    min_gap_days: float | None = None


class PerturbRequest(BaseModel):
    time: str
    segment_id: int
    concept_id: int
    alpha: float | list[float] = 0.0


def _parse_time(text: str) -> datetime:
    try:
        dt = datetime.fromisoformat(text)
    except ValueError:
        raise HTTPException(422, f"malformed time {text!r}")
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    if dt.minute % 10 or dt.second or dt.microsecond:
        raise HTTPException(422, f"time {text!r} is not on the 10-minute lattice")
    return dt


def _b64_f32(grid: np.ndarray) -> str:
    return base64.b64encode(np.asarray(grid, dtype="<f4").tobytes()).decode("ascii")


class ServiceState:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.frames = pipeline.load_frames(cfg)
        self.model = ToyModel.load_weights(cfg.weights_path,
                                           pipeline.model_config_for(cfg))
        self.prune = pipeline.load_prune(cfg.prune_path)
        self.labels = load_labels(cfg.labels_dir)
        self.log = SearchLog(cfg.log_path)
        self.masks: dict[datetime, object] = {}
        try:
            self.index = pipeline.open_index(cfg)
        except MissingArtifactError:
            self.index = None
        from .prober import load_bundle
        try:
            self.probers = {p.concept_id: p for p in load_bundle(cfg.probers_path)}
        except MissingArtifactError:
            self.probers = {}

    def mask_for(self, t: datetime):
        if t not in self.masks:
            self.masks[t] = pipeline.segment_frame(self.cfg, self.frames[t])
        return self.masks[t]

    def feature_for(self, t: datetime):
        from datetime import timedelta
        history = [t - timedelta(minutes=10 * i) for i in range(6, -1, -1)]
        missing = [h for h in history if h not in self.frames]
        if missing:
            raise HTTPException(404, f"missing frames for {t.isoformat()}")
        model_input = assemble_input([self.frames[h] for h in history], t)
        return self.model.encode(model_input)


def create_app(cfg: PipelineConfig) -> FastAPI:
    app = FastAPI(title="rainconcepts service")
    state = ServiceState(cfg)
    app.state.rc = state

    @app.get(API_PREFIX + "/frames")
    def get_frames(time_param: str = Query(alias="time")):
        t = _parse_time(time_param)
        frame = state.frames.get(t)
        if frame is None:
            raise HTTPException(404, f"no frame at {t.isoformat()}")
        mask = state.mask_for(t)
        return {
            "time": t.isoformat(),
            "shape": list(frame.grid.shape),
            "grid": _b64_f32(frame.grid),
            "extent": list(frame.extent),
            "segments": [
                {"id": s.segment_id, "bbox": list(s.bbox), "pixels": s.pixel_count}
                for s in mask.segments
            ],
            "times": None,
        }

    @app.get(API_PREFIX + "/times")
    def get_times():
        return {"times": [t.isoformat() for t in sorted(state.frames)]}

    @app.post(API_PREFIX + "/query")
    def post_query(req: QueryRequest):
        t0 = time.perf_counter()
        qt = req.time
        try:
            t = _parse_time(req.time)
            qt = t.isoformat()
            if state.index is None:
                raise HTTPException(409, "index not built")
            result = pipeline.query_segment(
                cfg, state.index, t, req.segment_id,
                k1=req.k1, k2=req.k2, min_gap_days=req.min_gap_days)
        except MissingArtifactError as exc:
            state.log.append(qt, "error", str(exc),
                             (time.perf_counter() - t0) * 1e3)
            raise HTTPException(404, str(exc))
        except HTTPException as exc:
            state.log.append(qt, "error", str(exc.detail),
                             (time.perf_counter() - t0) * 1e3)
            raise
        payload = pipeline.neighbor_result_to_dict(result)
        payload["concept_names"] = {
            str(cid): c.name for cid, c in state.labels.concepts.items()}
        state.log.append(qt, "success",
                         f"{len(result.neighbors)} neighbors",
                         (time.perf_counter() - t0) * 1e3)
        return payload

    @app.post(API_PREFIX + "/perturb")
    def post_perturb(req: PerturbRequest):
        t = _parse_time(req.time)
        if t not in state.frames:
            raise HTTPException(404, f"no frame at {t.isoformat()}")
        prober = state.probers.get(req.concept_id)
        if prober is None:
            raise HTTPException(404, f"no prober for concept {req.concept_id}")
        mask = state.mask_for(t)
        if req.segment_id not in [s.segment_id for s in mask.segments]:
            raise HTTPException(404, f"segment {req.segment_id} not in frame")
        feature = state.feature_for(t)
        cav = lift_cav(prober, state.prune, state.model.config.bottleneck_shape)
        alphas = req.alpha if isinstance(req.alpha, list) else [req.alpha]
        baseline, _ = perturb_prediction(state.model, feature, cav, 0.0)
        perturbed = {}
        for a in alphas:
            _, p = perturb_prediction(state.model, feature, cav, float(a))
            perturbed[str(a)] = p.astype(int).tolist()
        return {
            "time": t.isoformat(),
            "concept_id": req.concept_id,
            "shape": list(baseline.shape),
            "baseline": baseline.astype(int).tolist(),
            "perturbed": perturbed,
        }

    @app.get(API_PREFIX + "/logs")
    def get_logs(limit: int = 50):
        entries = state.log.entries()
        return {"entries": list(reversed(entries))[:max(limit, 0)]}

    @app.get(API_PREFIX + "/importance")
    def get_importance(wrapper: str = "masked_sum"):
        path = cfg.reports_dir / f"importance_{wrapper}.json"
        if not path.exists():
            raise HTTPException(409, f"importance report for {wrapper!r} not generated")
        with open(path) as fh:
            return json.load(fh)

    @app.get(API_PREFIX + "/concepts")
    def get_concepts():
        return {
            "concepts": [
                {"concept_id": c.concept_id, "name": c.name,
                 "source": c.source.value}
                for c in sorted(state.labels.concepts.values(),
                                key=lambda c: c.concept_id)
            ]
        }

    return app


def run_service(cfg: PipelineConfig) -> None:
    import uvicorn

    uvicorn.run(create_app(cfg), host=cfg.host, port=cfg.port)
