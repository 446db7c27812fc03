from pathlib import Path

import pytest

from rainconcepts.config import PipelineConfig, load_config
from rainconcepts.errors import ConfigurationError


def test_defaults():
    cfg = PipelineConfig()
    assert cfg.seed == 42 and cfg.d == 300 and cfg.k2 == 3


def test_path_properties_under_root(tmp_path):
    cfg = PipelineConfig(root=tmp_path)
    for prop in ("raw_dir", "weights_path", "store_path", "prune_path",
                 "labels_dir", "probers_path", "pcmap_path", "index_path",
                 "reports_dir", "log_path"):
        assert tmp_path in getattr(cfg, prop).parents or \
            getattr(cfg, prop).parent == tmp_path


@pytest.mark.parametrize("field,value", [
    ("d", 0), ("epsilon", 0.0), ("min_samples", 0),
    ("k1", 0), ("k2", -1), ("min_gap_days", -1.0),
])
def test_validation(field, value):
    with pytest.raises(ConfigurationError):
        PipelineConfig(**{field: value})


def test_file_values(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("seed: 7\nd: 55\nroot: /tmp/elsewhere\n")
    cfg = load_config(path)
    assert cfg.seed == 7 and cfg.d == 55 and cfg.root == Path("/tmp/elsewhere")


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("bogus: 1\n")
    with pytest.raises(ConfigurationError, match="bogus"):
        load_config(path)


def test_non_mapping_rejected(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("- a\n- b\n")
    with pytest.raises(ConfigurationError):
        load_config(path)


def test_environment_overrides_file(tmp_path, monkeypatch):
    path = tmp_path / "c.yaml"
    path.write_text("seed: 7\n")
    monkeypatch.setenv("RAINCONCEPTS_SEED", "11")
    assert load_config(path).seed == 11


def test_explicit_overrides_beat_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("RAINCONCEPTS_SEED", "11")
    assert load_config(None, {"seed": 13}).seed == 13


def test_none_overrides_ignored(monkeypatch):
    monkeypatch.setenv("RAINCONCEPTS_D", "77")
    cfg = load_config(None, {"d": None, "k1": 4})
    assert cfg.d == 77 and cfg.k1 == 4


def test_type_coercion(monkeypatch):
    monkeypatch.setenv("RAINCONCEPTS_MIN_GAP_DAYS", "1.5")
    monkeypatch.setenv("RAINCONCEPTS_ROOT", "/data/run")
    cfg = load_config()
    assert cfg.min_gap_days == 1.5
    assert cfg.root == Path("/data/run")
