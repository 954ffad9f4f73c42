"""Experiment runner: config handling, determinism, manifest replay."""

import json

import numpy as np
import pytest

from semlink.experiments import (
    COLUMNS,
    ConfigError,
    config_digest,
    format_cell,
    load_config,
    merge_config,
    replay,
    run_experiment,
)


def _tiny_linear_region():
    return merge_config(
        {
            "linear_region": {
                "trials": 2,
                "snr_db": [5.0, 15.0],
                "channels": ["awgn"],
                "n_images": 2,
            }
        }
    )


def _tiny_error_spectrum():
    return merge_config({"error_spectrum": {"trials": 2, "n_blocks": 2}})


class TestConfig:
    def test_defaults_pass_through(self):
        cfg = merge_config(None)
        assert cfg["master_seed"] == 20260815
        assert cfg["linear_region"]["trials"] == 10

    def test_override_merges_deeply(self):
        cfg = merge_config({"linear_region": {"trials": 3}})
        assert cfg["linear_region"]["trials"] == 3
        # untouched siblings keep their defaults
        assert cfg["linear_region"]["codec_seed"] == 7

    def test_unknown_key_reports_dotted_path(self):
        with pytest.raises(ConfigError, match="linear_region.trails"):
            merge_config({"linear_region": {"trails": 3}})
        with pytest.raises(ConfigError, match="unknown config key: typo"):
            merge_config({"typo": 1})

    def test_section_must_be_mapping(self):
        with pytest.raises(ConfigError):
            merge_config({"linear_region": [1, 2]})

    def test_load_config_reads_yaml(self, tmp_path):
        p = tmp_path / "cfg.yaml"
        p.write_text("master_seed: 5\nlinear_region:\n  trials: 1\n")
        cfg = load_config(str(p))
        assert cfg["master_seed"] == 5
        assert cfg["linear_region"]["trials"] == 1
        # empty file means pure defaults
        q = tmp_path / "empty.yaml"
        q.write_text("")
        assert load_config(str(q)) == merge_config(None)

    def test_digest_is_order_insensitive(self):
        a = {"x": 1, "y": {"a": 2, "b": 3}}
        b = {"y": {"b": 3, "a": 2}, "x": 1}
        assert config_digest(a) == config_digest(b)
        assert config_digest(a) != config_digest({"x": 2, "y": {"a": 2, "b": 3}})


class TestFormatCell:
    def test_representations(self):
        assert format_cell(True) == "true"
        assert format_cell(False) == "false"
        assert format_cell(3) == "3"
        assert format_cell(np.int64(3)) == "3"
        assert format_cell(2.5) == "2.5"
        assert format_cell(float("nan")) == "nan"
        assert format_cell(None) == ""
        assert format_cell("awgn") == "awgn"

    def test_floats_keep_ten_significant_digits(self):
        assert format_cell(1.23456789012345) == "1.23456789"
        assert format_cell(0.0001234567890123) == "0.000123456789"


class TestRunExperiment:
    def test_linear_region_writes_csv_and_manifest(self, tmp_path):
        cfg = _tiny_linear_region()
        csv_path, manifest_path = run_experiment("linear_region", cfg, str(tmp_path))
        lines = csv_path.read_text().strip().split("\n")
        assert lines[0] == ",".join(COLUMNS["linear_region"])
        # channels x snrs x trials, and each run scores both interleaver arms
        assert len(lines) - 1 == 1 * 2 * 2 * 2
        shuffles = {line.split(",")[3] for line in lines[1:]}
        assert shuffles == {"true", "false"}
        manifest = json.loads(manifest_path.read_text())
        assert manifest["scenario"] == "linear_region"
        assert manifest["config_sha256"] == config_digest(cfg)
        assert manifest["n_rows"] == 8

    def test_runs_are_byte_deterministic(self, tmp_path):
        cfg = _tiny_error_spectrum()
        a, _ = run_experiment("error_spectrum", cfg, str(tmp_path / "a"))
        b, _ = run_experiment("error_spectrum", cfg, str(tmp_path / "b"))
        assert a.read_bytes() == b.read_bytes()

    def test_workers_do_not_change_output(self, tmp_path):
        cfg = _tiny_error_spectrum()
        a, _ = run_experiment("error_spectrum", cfg, str(tmp_path / "w1"), workers=1)
        b, _ = run_experiment("error_spectrum", cfg, str(tmp_path / "w2"), workers=2)
        assert a.read_bytes() == b.read_bytes()

    def test_master_seed_changes_results(self, tmp_path):
        cfg = _tiny_error_spectrum()
        other = dict(cfg, master_seed=1)
        a, _ = run_experiment("error_spectrum", cfg, str(tmp_path / "a"))
        b, _ = run_experiment("error_spectrum", other, str(tmp_path / "b"))
        assert a.read_bytes() != b.read_bytes()

    def test_unknown_scenario_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            run_experiment("beamforming", merge_config(None), str(tmp_path))

    def test_error_spectrum_rows_cover_both_views(self, tmp_path):
        cfg = _tiny_error_spectrum()
        csv_path, _ = run_experiment("error_spectrum", cfg, str(tmp_path))
        lines = csv_path.read_text().strip().split("\n")[1:]
        views = {line.split(",")[1] for line in lines}
        assert views == {"physical", "original"}
        # 2 views x 2 streams x 72 subcarriers
        assert len(lines) == 2 * 2 * 72


class TestReplay:
    def test_replay_reproduces_csv_bytes(self, tmp_path):
        cfg = _tiny_linear_region()
        csv_path, manifest_path = run_experiment("linear_region", cfg, str(tmp_path / "run"))
        replay_csv, _ = replay(str(manifest_path), str(tmp_path / "replay"))
        assert replay_csv.read_bytes() == csv_path.read_bytes()

    def test_tampered_manifest_rejected(self, tmp_path):
        cfg = _tiny_error_spectrum()
        _, manifest_path = run_experiment("error_spectrum", cfg, str(tmp_path / "run"))
        manifest = json.loads(manifest_path.read_text())
        manifest["config"]["master_seed"] = 999  # hash now stale
        manifest_path.write_text(json.dumps(manifest))
        with pytest.raises(ConfigError, match="hash"):
            replay(str(manifest_path), str(tmp_path / "replay"))

    def test_manifest_missing_fields_rejected(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"scenario": "error_spectrum"}))
        with pytest.raises(ConfigError, match="config"):
            replay(str(p), str(tmp_path / "out"))

    def test_replayed_manifest_can_replay_again(self, tmp_path):
        cfg = _tiny_error_spectrum()
        _, m1 = run_experiment("error_spectrum", cfg, str(tmp_path / "a"))
        _, m2 = replay(str(m1), str(tmp_path / "b"))
        replay_csv, _ = replay(str(m2), str(tmp_path / "c"))
        assert (tmp_path / "a" / "results.csv").read_bytes() == replay_csv.read_bytes()
