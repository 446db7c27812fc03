"""Raw radar file I/O and the synthetic dataset generator.

File format (little-endian): magic ``HSR1``, u32 height, u32 width,
i64 unix timestamp (seconds), then height*width i16 values holding
hundredths of dBZ. The sentinel value -32768 marks missing pixels.
See docs/formats.md.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, asdict
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .errors import RejectedFrameError
from .preprocess import RadarFrame, dbz_to_rainrate, rainrate_to_dbz

MAGIC = b"HSR1"
SENTINEL = -32768
_HEADER = struct.Struct("<4sIIq")


def frame_filename(ts: datetime) -> str:
    return "hsr_" + ts.strftime("%Y%m%d%H%M") + ".bin"


def write_frame_raw(path: Path, raw: np.ndarray, ts: datetime) -> None:
    raw = np.asarray(raw, dtype=np.int16)
    h, w = raw.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, h, w, int(ts.timestamp())))
        fh.write(raw.astype("<i2").tobytes())


def read_frame_raw(path: Path) -> tuple[np.ndarray, datetime]:
    data = Path(path).read_bytes()
    magic, h, w, ts = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise RejectedFrameError(f"{path}: bad magic {magic!r}")
    raw = np.frombuffer(data, dtype="<i2", offset=_HEADER.size, count=h * w)
    return raw.reshape(h, w).astype(np.int16), datetime.fromtimestamp(ts, tz=timezone.utc)


def read_frame(path: Path) -> RadarFrame:
    raw, ts = read_frame_raw(path)
    return dbz_to_rainrate(raw, timestamp=ts, sentinel=SENTINEL)


def list_frame_files(directory: Path) -> list[Path]:
    return sorted(Path(directory).glob("hsr_*.bin"))


def encode_rain(rain: np.ndarray) -> np.ndarray:
    """Quantize a rain-rate grid to the scaled-dBZ i16 wire format."""
    rain = np.asarray(rain, dtype=np.float64)
    raw = np.full(rain.shape, SENTINEL, dtype=np.int16)
    wet = rain > 1e-3
    dbz = rainrate_to_dbz(rain[wet])
    raw[wet] = np.clip(np.round(dbz * 100.0), -32767, 32767).astype(np.int16)
    return raw


# --- synthetic data -------------------------------------------------------

#: (name, (sigma_r, sigma_c), peak mm/hr range) per synthetic mechanism.
MECHANISMS = (
    ("isolated_convective", (2.5, 2.5), (20.0, 35.0)),
    ("stationary_front_band", (2.0, 10.0), (10.0, 25.0)),
    ("east_coast_rainfall", (8.0, 2.5), (5.0, 15.0)),
    ("drizzle_broad", (7.0, 7.0), (0.8, 2.5)),
    ("typhoon_spiral", (6.0, 6.0), (30.0, 60.0)),
    ("scattered_shower", (4.0, 4.0), (5.0, 12.0)),
)


@dataclass(frozen=True)
class SyntheticConfig:
    grid_size: int = 64
    n_frames: int = 96
    cells_per_frame: int = 3
    start_time: datetime = datetime(2021, 7, 1, tzinfo=timezone.utc)
    seed: int = 42
    episode_length: int = 24  # frames a cell persists


@dataclass(frozen=True)
class CellTruth:
    mechanism: int
    row: float
    col: float
    sigma: tuple[float, float]
    peak: float


def _render_cells(cells: list[CellTruth], n: int) -> np.ndarray:
    rr, cc = np.mgrid[0:n, 0:n].astype(np.float64)
    grid = np.zeros((n, n), dtype=np.float64)
    for cell in cells:
        sr, sc = cell.sigma
        g = cell.peak * np.exp(
            -0.5 * (((rr - cell.row) / sr) ** 2 + ((cc - cell.col) / sc) ** 2)
        )
        grid = np.maximum(grid, g)
    return grid


def generate_dataset(outdir: Path, cfg: SyntheticConfig) -> list[Path]:
    """Write a seeded synthetic radar sequence plus a cell-truth sidecar.

    Cells live for ``episode_length`` frames and drift; each carries one
    mechanism id used downstream to derive synthetic concept labels.
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(cfg.seed)
    n = cfg.grid_size

    # schedule episodes so every frame has cells_per_frame well-separated
    # cells and mechanisms appear in balanced rotation
    slot_centers = [
        (0.25 * n, 0.25 * n), (0.25 * n, 0.75 * n),
        (0.75 * n, 0.25 * n), (0.75 * n, 0.75 * n),
        (0.5 * n, 0.5 * n),
    ]
    episodes = []
    frame = 0
    mech_counter = 0
    while frame < cfg.n_frames:
        slots = rng.permutation(len(slot_centers))[:cfg.cells_per_frame]
        for slot in slots:
            mech = mech_counter % len(MECHANISMS)
            mech_counter += 1
            name, (sr, sc), (lo, hi) = MECHANISMS[mech]
            r0, c0 = slot_centers[slot]
            episodes.append({
                "mechanism": mech,
                "start": frame,
                "end": min(frame + cfg.episode_length, cfg.n_frames),
                "row0": r0 + float(rng.uniform(-0.05 * n, 0.05 * n)),
                "col0": c0 + float(rng.uniform(-0.05 * n, 0.05 * n)),
                "vel": (float(rng.normal(0, 0.08)), float(rng.normal(0, 0.08))),
                "sigma": (sr * float(rng.uniform(0.8, 1.2)),
                          sc * float(rng.uniform(0.8, 1.2))),
                "peak": float(rng.uniform(lo, hi)),
            })
        frame += cfg.episode_length

    paths = []
    truth: dict[str, list[dict]] = {}
    for i in range(cfg.n_frames):
        ts = cfg.start_time + timedelta(minutes=10 * i)
        cells = []
        for ep in episodes:
            if ep["start"] <= i < ep["end"]:
                age = i - ep["start"]
                cells.append(CellTruth(
                    mechanism=ep["mechanism"],
                    row=ep["row0"] + ep["vel"][0] * age,
                    col=ep["col0"] + ep["vel"][1] * age,
                    sigma=tuple(ep["sigma"]),
                    peak=ep["peak"],
                ))
        grid = _render_cells(cells, n)
        path = outdir / frame_filename(ts)
        write_frame_raw(path, encode_rain(grid), ts)
        paths.append(path)
        truth[ts.isoformat()] = [asdict(c) for c in cells]

    with open(outdir / "cells.json", "w") as fh:
        json.dump(truth, fh, indent=1, sort_keys=True)
    return paths


def load_cell_truth(outdir: Path) -> dict[str, list[dict]]:
    with open(Path(outdir) / "cells.json") as fh:
        return json.load(fh)
