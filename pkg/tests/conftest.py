"""Shared fixtures: a session-scoped workspace with the full pipeline run."""

from __future__ import annotations

import numpy as np
import pytest

from rainconcepts import pipeline
from rainconcepts.config import PipelineConfig


@pytest.fixture(scope="session")
def workspace(tmp_path_factory) -> PipelineConfig:
    """One fully built pipeline root shared by the integration tests."""
    root = tmp_path_factory.mktemp("pipeline_root")
    cfg = PipelineConfig(root=root)
    pipeline.gen_data(cfg)
    pipeline.extract(cfg)
    pipeline.train_probers(cfg)
    pipeline.build_pc(cfg)
    pipeline.build_index(cfg)
    return cfg


@pytest.fixture(scope="session")
def separable_data():
    """Two Gaussian clusters with margin >= 1 along the first axis."""
    rng = np.random.default_rng(7)
    dim = 12
    pos = rng.normal(0, 0.2, (120, dim))
    neg = rng.normal(0, 0.2, (120, dim))
    pos[:, 0] += 1.5
    neg[:, 0] -= 1.5
    x = np.concatenate([pos, neg])
    y = np.concatenate([np.ones(120), np.zeros(120)])
    return x, y
