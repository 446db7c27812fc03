import json

import pytest

from rainconcepts.cli import (COMMON_FLAGS, EXIT_CONFIG, EXIT_MISSING,
                              build_parser, main)
from rainconcepts.config import PipelineConfig


def run_cli(*argv):
    return main(list(argv))


def test_every_config_field_has_a_flag():
    import dataclasses
    fields = {f.name for f in dataclasses.fields(PipelineConfig)}
    flagged = {field for field, _, _ in COMMON_FLAGS.values()}
    assert flagged == fields


def test_help_lists_all_subcommands(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    out = capsys.readouterr().out
    for cmd in ("gen-data", "extract", "train-probers", "build-pc", "index",
                "query", "importance", "perturb", "bench", "serve"):
        assert cmd in out


def test_subcommand_help_enumerates_every_flag(capsys):
    """The --help text of each subcommand is diffed against the flag
    registry: no flag may be missing or undocumented."""
    for cmd in ("gen-data", "extract", "train-probers", "build-pc", "index",
                "query", "importance", "perturb", "bench", "serve"):
        with pytest.raises(SystemExit):
            build_parser().parse_args([cmd, "--help"])
        out = capsys.readouterr().out
        for flag in COMMON_FLAGS:
            assert flag in out, (cmd, flag)


def test_bad_config_file_exits_2(tmp_path, capsys):
    path = tmp_path / "c.yaml"
    path.write_text("unknown_field: 1\n")
    code = run_cli("gen-data", "--config", str(path), "--root", str(tmp_path))
    assert code == EXIT_CONFIG
    assert "configuration error" in capsys.readouterr().err


def test_invalid_value_exits_2(tmp_path, capsys):
    code = run_cli("gen-data", "--root", str(tmp_path), "--k1", "0")
    assert code == EXIT_CONFIG


def test_missing_artifact_exits_3(tmp_path, capsys):
    code = run_cli("extract", "--root", str(tmp_path / "empty"))
    assert code == EXIT_MISSING
    assert "missing artifact" in capsys.readouterr().err


def test_query_without_index_exits_3(tmp_path):
    code = run_cli("query", "--root", str(tmp_path / "empty"),
                   "--time", "2021-07-01T12:00:00", "--segment-id", "1")
    assert code == EXIT_MISSING


def test_query_json_output(workspace, capsys):
    code = run_cli("query", "--root", str(workspace.root), "--json",
                   "--time", "2021-07-01T12:00:00", "--segment-id", "1",
                   "--min-gap-days", "0.05")
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert len(payload["neighbors"]) == workspace.k2
    assert payload["concepts_used"]


def test_perturb_command(workspace, capsys):
    code = run_cli("perturb", "--root", str(workspace.root), "--json",
                   "--time", "2021-07-01T12:00:00", "--concept-id", "0",
                   "--alpha", "0.0", "1.5")
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["perturbed"]["0.0"] == payload["baseline"]


def test_flag_overrides_environment(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("RAINCONCEPTS_N_FRAMES", "96")
    code = run_cli("gen-data", "--root", str(tmp_path), "--n-frames", "8",
                   "--json")
    assert code == 0
    assert json.loads(capsys.readouterr().out)["frames"] == 8


def test_bench_desk_scale(capsys):
    code = run_cli("bench", "--n-samples", "200", "--n-queries", "8",
                   "--dim", "240", "--dims", "10", "40",
                   "--signature-coords", "40",
                   "--methods", "full", "pcnse", "--json")
    assert code == 0
    payload = json.loads(capsys.readouterr().out)
    methods = {(r["method"], r["dims"]) for r in payload["rows"]}
    assert ("full", 240) in methods
    assert ("pcnse", 10) in methods and ("pcnse", 40) in methods
    for row in payload["rows"]:
        assert 0.0 <= row["p3"][0] <= 1.0
