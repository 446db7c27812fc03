"""Pipeline configuration: file values < environment < CLI flags.

Config files are flat YAML key-value mappings; environment overrides use
``RAINCONCEPTS_<FIELD>`` (upper-cased field name). See docs/formats.md.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

import yaml

from .errors import ConfigurationError


@dataclass(frozen=True)
class PipelineConfig:
    root: Path = Path("workspace")

    # hyperparameters
    seed: int = 42
    d: int = 300
    k1: int = 3
    k2: int = 3
    l1_lambda: float = 1e-4
    epochs: int = 50
    epsilon: float = 1e-3
    min_samples: int = 20
    min_gap_days: float = 30.0
    rain_threshold: float = 0.1
    min_segment_pixels: int = 16

    # synthetic data
    grid_size: int = 64
    n_frames: int = 96
    cells_per_frame: int = 3

    # service
    host: str = "127.0.0.1"
    port: int = 8000
    threads: int = 0  # 0 = logical cores

    def __post_init__(self):
        object.__setattr__(self, "root", Path(self.root))
        if self.d < 1:
            raise ConfigurationError("d must be >= 1")
        if self.epsilon <= 0:
            raise ConfigurationError("epsilon must be > 0")
        if self.min_samples < 1:
            raise ConfigurationError("min_samples must be >= 1")
        if self.k1 < 1 or self.k2 < 1:
            raise ConfigurationError("k1 and k2 must be >= 1")
        if self.min_gap_days < 0:
            raise ConfigurationError("min_gap_days must be >= 0")

    # artifact locations under root
    @property
    def raw_dir(self) -> Path: return self.root / "raw"
    @property
    def weights_path(self) -> Path: return self.root / "model" / "weights.bin"
    @property
    def store_path(self) -> Path: return self.root / "features" / "store.fstr"
    @property
    def prune_path(self) -> Path: return self.root / "features" / "prune_map.json"
    @property
    def labels_dir(self) -> Path: return self.root / "labels"
    @property
    def probers_path(self) -> Path: return self.root / "probers" / "bundle.prbr"
    @property
    def pcmap_path(self) -> Path: return self.root / "pcmap" / "pc.pcmp"
    @property
    def index_path(self) -> Path: return self.root / "index" / "index.json"
    @property
    def reports_dir(self) -> Path: return self.root / "reports"
    @property
    def log_path(self) -> Path: return self.root / "logs" / "search_log.ndjson"


_FIELD_TYPES = {f.name: f.type for f in fields(PipelineConfig)}


def _coerce(name: str, value):
    kind = _FIELD_TYPES[name]
    if kind in ("Path", Path):
        return Path(value)
    if kind in ("int", int):
        return int(value)
    if kind in ("float", float):
        return float(value)
    return str(value)


def load_config(path: Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Build a config from file, environment, then explicit overrides."""
    values: dict = {}
    if path is not None:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigurationError(f"{path}: config must be a key-value mapping")
        for key, val in raw.items():
            if key not in _FIELD_TYPES:
                raise ConfigurationError(f"{path}: unknown config key {key!r}")
            values[key] = _coerce(key, val)
    for name in _FIELD_TYPES:
        env = os.environ.get(f"RAINCONCEPTS_{name.upper()}")
        if env is not None:
            values[name] = _coerce(name, env)
    for key, val in (overrides or {}).items():
        if val is not None:
            values[key] = _coerce(key, val)
    return PipelineConfig(**values)
