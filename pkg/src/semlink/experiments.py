"""Reproducible experiment scenarios: CSV results plus a replayable manifest.

Every scenario resolves its configuration against the defaults below, derives
all randomness from a single master seed, and writes rows in a fixed order
with fixed float formatting, so a rerun from the manifest reproduces the CSV
byte for byte.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .channel import (
    PaParams,
    derive_seed,
    draw_channel,
    exp_pdp_profile,
    identity_channel,
)
from .codec import (
    LinearCodec,
    QamCodec,
    bridge_export,
    bridge_import,
    gaussian_source,
    synthetic_images,
)
from .grid import OfdmParams
from .link import LinkConfig, run_link
from .metrics import error_spectrum, psnr_tiled
from .txchain import TxConfig

TOOL_NAME = "semlink"
TOOL_VERSION = __version__

MANIFEST_NAME = "manifest.json"
RESULTS_NAME = "results.csv"


class ConfigError(ValueError):
    """Bad experiment configuration (unknown key, missing value, wrong type)."""


DEFAULTS: dict = {
    "master_seed": 20260815,
    "linear_region": {
        "trials": 10,
        "snr_db": [0.0, 5.0, 10.0, 15.0, 20.0],
        "channels": ["awgn", "exp_pdp"],
        "n_images": 4,
        "codec_seed": 7,
        "exp_pdp": {"n_taps": 8, "decay_db_per_tap": 3.0},
    },
    "papr_sweep": {
        "trials": 3,
        "sources": ["gaussian", "qam16"],
        "bridge_input": None,
        "n_symbols": 3456,
        "input_power_db": {"start": -9.0, "stop": 6.0, "step": 1.5},
        "noise_power": 3e-3,
        "pa_backoff_db": 0.0,
    },
    "error_spectrum": {
        "trials": 8,
        "snr_db": 10.0,
        "n_blocks": 4,
        "n_taps": 2,
        "decay_db_per_tap": 6.0,
        "channel_seed": 424242,
        "shuffle": True,
        "shuffle_seed": None,
    },
    "bridge_transmit": {
        "input": None,
        "output": "received.smsy",
        "snr_db": 15.0,
        "channel": "awgn",
        "exp_pdp": {"n_taps": 8, "decay_db_per_tap": 3.0},
        "norm_factor": 1.0,
        "quant_bits": 0,
        "pa_backoff_db": None,
        "shuffle": True,
        "shuffle_seed": None,
    },
}

COLUMNS: dict[str, list[str]] = {
    "linear_region": [
        "scenario", "channel", "snr_db", "shuffle", "trial",
        "rx_snr_db", "evm_rms", "psnr_db", "mse",
    ],
    "papr_sweep": [
        "scenario", "source", "input_power_db", "trial", "rx_snr_db", "papr_p95_db",
    ],
    "error_spectrum": [
        "scenario", "view", "stream", "subcarrier_index", "mean_err_power",
    ],
    "bridge_transmit": [
        "scenario", "input", "output", "n_symbols", "channel", "snr_db",
        "rx_snr_db", "evm_rms", "papr_p95_db", "timing_offset",
    ],
}


def merge_config(user: dict | None) -> dict:
    """Overlay a user config on the defaults, rejecting unknown keys."""
    return _merge(DEFAULTS, user or {}, "")


def _merge(defaults: dict, override: dict, path: str) -> dict:
    if not isinstance(override, dict):
        raise ConfigError(f"config section {path or '<root>'} must be a mapping")
    for key in override:
        if key not in defaults:
            where = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown config key: {where}")
    out = {}
    for key, dval in defaults.items():
        if key not in override:
            out[key] = dval
        elif isinstance(dval, dict):
            out[key] = _merge(dval, override[key], f"{path}.{key}" if path else str(key))
        else:
            out[key] = override[key]
    return out


def load_config(path: str | None) -> dict:
    """Read a YAML config file (or use pure defaults) and resolve it."""
    if path is None:
        return merge_config(None)
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return merge_config(data)


def config_digest(config: dict) -> str:
    """sha256 of the canonical JSON form of a resolved config."""
    canonical = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def format_cell(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        return "%.10g" % v
    if value is None:
        return ""
    return str(value)


def _power_points(spec: dict) -> list[float]:
    start, stop, step = spec["start"], spec["stop"], spec["step"]
    if step <= 0:
        raise ConfigError("input_power_db.step must be positive")
    n = int(round((stop - start) / step)) + 1
    return [start + i * step for i in range(n)]


# --- scenario task lists (the unit of parallelism) -------------------------

def _build_tasks(scenario: str, config: dict) -> list[dict]:
    master = config["master_seed"]
    if scenario == "linear_region":
        sc = config["linear_region"]
        return [
            {"channel": chan, "snr_db": float(snr), "trial": trial,
             "seed": derive_seed(master, scenario, chan, "%g" % snr, trial)}
            for chan in sc["channels"]
            for snr in sc["snr_db"]
            for trial in range(sc["trials"])
        ]
    if scenario == "papr_sweep":
        sc = config["papr_sweep"]
        sources = list(sc["sources"])
        if sc["bridge_input"] is not None:
            sources.append("bridge")
        return [
            {"source": src, "input_power_db": float(p), "trial": trial,
             "seed": derive_seed(master, scenario, src, "%g" % p, trial)}
            for src in sources
            for p in _power_points(sc["input_power_db"])
            for trial in range(sc["trials"])
        ]
    if scenario == "error_spectrum":
        sc = config["error_spectrum"]
        return [
            {"trial": trial, "seed": derive_seed(master, scenario, trial)}
            for trial in range(sc["trials"])
        ]
    if scenario == "bridge_transmit":
        return [{"seed": derive_seed(master, scenario, 0)}]
    raise ConfigError(f"unknown scenario: {scenario}")


def _run_task(scenario: str, config: dict, task: dict, out_dir: str) -> list[dict]:
    if scenario == "linear_region":
        return _linear_region_task(config, task)
    if scenario == "papr_sweep":
        return _papr_sweep_task(config, task)
    if scenario == "error_spectrum":
        return _error_spectrum_task(config, task)
    if scenario == "bridge_transmit":
        return _bridge_transmit_task(config, task, out_dir)
    raise ConfigError(f"unknown scenario: {scenario}")


def _linear_region_task(config: dict, task: dict) -> list[dict]:
    sc = config["linear_region"]
    seed = task["seed"]
    snr = task["snr_db"]
    images = synthetic_images(derive_seed(seed, "images"), sc["n_images"])
    codec = LinearCodec(seed=sc["codec_seed"], design_snr_db=snr)
    symbols = codec.encode_batch(images)

    if task["channel"] == "awgn":
        ch = identity_channel(2)
    elif task["channel"] == "exp_pdp":
        profile = exp_pdp_profile(sc["exp_pdp"]["n_taps"], sc["exp_pdp"]["decay_db_per_tap"])
        ch = draw_channel(profile, n_tx=2, n_rx=2, seed=derive_seed(seed, "channel"))
    else:
        raise ConfigError(f"unknown channel kind: {task['channel']}")
    noise_seed = derive_seed(seed, "noise")

    rows = []
    for shuffled in (True, False):
        cfg = LinkConfig(
            shuffle_seed=derive_seed(seed, "perm") if shuffled else None,
            snr_db=snr,
        )
        res = run_link(symbols, cfg, ch, noise_seed=noise_seed)
        noise_est = res.report.per_position_noise_est * cfg.tx.norm_factor**2
        decoded = codec.decode_batch(res.report.recovered, noise_est)
        mse = float(np.mean((decoded - images) ** 2))
        rows.append({
            "scenario": "linear_region",
            "channel": task["channel"],
            "snr_db": snr,
            "shuffle": shuffled,
            "trial": task["trial"],
            "rx_snr_db": res.report.rx_snr_db,
            "evm_rms": res.report.evm_rms,
            "psnr_db": psnr_tiled(images, decoded),
            "mse": mse,
        })
    return rows


def _papr_sweep_task(config: dict, task: dict) -> list[dict]:
    sc = config["papr_sweep"]
    seed = task["seed"]
    n = sc["n_symbols"]
    src = task["source"]
    if src == "gaussian":
        symbols = gaussian_source(derive_seed(seed, "payload"), n)
    elif src == "qam16":
        rng = np.random.Generator(np.random.Philox(key=derive_seed(seed, "payload")))
        bits = rng.integers(0, 2, size=4 * n, dtype=np.uint8)
        symbols = QamCodec(16).bits_to_symbols(bits)
    elif src == "bridge":
        symbols = bridge_import(sc["bridge_input"])
    else:
        raise ConfigError(f"unknown source kind: {src}")

    scale = 10.0 ** (task["input_power_db"] / 20.0)
    cfg = LinkConfig(
        tx=TxConfig(pa=PaParams(backoff_db=sc["pa_backoff_db"])),
        noise_mode="fixed_power",
        noise_power=sc["noise_power"],
    )
    res = run_link(scale * symbols, cfg, identity_channel(2), noise_seed=derive_seed(seed, "noise"))
    return [{
        "scenario": "papr_sweep",
        "source": src,
        "input_power_db": task["input_power_db"],
        "trial": task["trial"],
        "rx_snr_db": res.report.rx_snr_db,
        "papr_p95_db": res.papr.p95_db,
    }]


def _error_spectrum_channel(sc: dict):
    profile = exp_pdp_profile(sc["n_taps"], sc["decay_db_per_tap"])
    return draw_channel(profile, n_tx=2, n_rx=2, seed=sc["channel_seed"])


def _error_spectrum_task(config: dict, task: dict) -> list[dict]:
    sc = config["error_spectrum"]
    seed = task["seed"]
    params = OfdmParams()
    n_symbols = sc["n_blocks"] * params.block_capacity
    symbols = gaussian_source(derive_seed(seed, "payload"), n_symbols)
    shuffle_seed = None
    if sc["shuffle"]:
        shuffle_seed = sc["shuffle_seed"]
        if shuffle_seed is None:
            shuffle_seed = derive_seed(config["master_seed"], "error_spectrum", "perm")
    cfg = LinkConfig(shuffle_seed=shuffle_seed, snr_db=sc["snr_db"])
    res = run_link(
        symbols, cfg, _error_spectrum_channel(sc), noise_seed=derive_seed(seed, "noise")
    )
    spectrum = error_spectrum(res.report, res.plan)
    # Hand back the raw per-trial sums so the reducer can average across trials.
    rows = []
    for view in ("physical", "original"):
        mean = spectrum[f"mean_err_power_{view}"]
        count = spectrum[f"count_{view}"]
        rows.append({
            "_view": view,
            "_stream": spectrum["stream"],
            "_subcarrier": spectrum["subcarrier"],
            "_sum": np.where(count > 0, mean * count, 0.0),
            "_count": count,
        })
    return rows


def _reduce_error_spectrum(per_task_rows: list[list[dict]]) -> list[dict]:
    acc: dict[str, dict[str, np.ndarray]] = {}
    for rows in per_task_rows:
        for part in rows:
            view = part["_view"]
            if view not in acc:
                acc[view] = {
                    "stream": part["_stream"],
                    "subcarrier": part["_subcarrier"],
                    "sum": np.zeros_like(part["_sum"]),
                    "count": np.zeros_like(part["_count"]),
                }
            acc[view]["sum"] = acc[view]["sum"] + part["_sum"]
            acc[view]["count"] = acc[view]["count"] + part["_count"]
    out = []
    for view in ("physical", "original"):
        a = acc[view]
        with np.errstate(invalid="ignore"):
            mean = np.where(a["count"] > 0, a["sum"] / np.maximum(a["count"], 1), np.nan)
        for i in range(len(mean)):
            out.append({
                "scenario": "error_spectrum",
                "view": view,
                "stream": int(a["stream"][i]),
                "subcarrier_index": int(a["subcarrier"][i]),
                "mean_err_power": float(mean[i]),
            })
    return out


def _bridge_transmit_task(config: dict, task: dict, out_dir: str) -> list[dict]:
    sc = config["bridge_transmit"]
    if sc["input"] is None:
        raise ConfigError("bridge_transmit.input must point to a bridge file")
    seed = task["seed"]
    symbols = bridge_import(sc["input"])

    pa = None if sc["pa_backoff_db"] is None else PaParams(backoff_db=sc["pa_backoff_db"])
    tx = TxConfig(norm_factor=sc["norm_factor"], quant_bits=sc["quant_bits"], pa=pa)
    shuffle_seed = None
    if sc["shuffle"]:
        shuffle_seed = sc["shuffle_seed"]
        if shuffle_seed is None:
            shuffle_seed = derive_seed(seed, "perm")
    if sc["snr_db"] is None:
        cfg = LinkConfig(tx=tx, shuffle_seed=shuffle_seed, noise_mode="off")
    else:
        cfg = LinkConfig(tx=tx, shuffle_seed=shuffle_seed, snr_db=sc["snr_db"])

    if sc["channel"] == "awgn":
        ch = identity_channel(2)
    elif sc["channel"] == "exp_pdp":
        profile = exp_pdp_profile(sc["exp_pdp"]["n_taps"], sc["exp_pdp"]["decay_db_per_tap"])
        ch = draw_channel(profile, n_tx=2, n_rx=2, seed=derive_seed(seed, "channel"))
    else:
        raise ConfigError(f"unknown channel kind: {sc['channel']}")

    res = run_link(symbols, cfg, ch, noise_seed=derive_seed(seed, "noise"))
    out_path = Path(out_dir) / sc["output"]
    bridge_export(res.report.recovered, str(out_path))
    return [{
        "scenario": "bridge_transmit",
        "input": sc["input"],
        "output": sc["output"],
        "n_symbols": symbols.size,
        "channel": sc["channel"],
        "snr_db": math.nan if sc["snr_db"] is None else sc["snr_db"],
        "rx_snr_db": res.report.rx_snr_db,
        "evm_rms": res.report.evm_rms,
        "papr_p95_db": res.papr.p95_db,
        "timing_offset": res.report.timing_offset,
    }]


def _task_star(args):
    return _run_task(*args)


def run_experiment(
    scenario: str,
    config: dict,
    out_dir: str,
    workers: int = 1,
) -> tuple[Path, Path]:
    """Run one scenario and write results.csv plus manifest.json into out_dir.

    `config` must already be resolved (see load_config / merge_config). Rows
    come out in task order no matter how many workers run, so the CSV bytes
    do not depend on `workers`.
    """
    if scenario not in COLUMNS:
        raise ConfigError(f"unknown scenario: {scenario}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    tasks = _build_tasks(scenario, config)
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            per_task = list(
                pool.map(_task_star, [(scenario, config, t, str(out)) for t in tasks])
            )
    else:
        per_task = [_run_task(scenario, config, t, str(out)) for t in tasks]

    if scenario == "error_spectrum":
        rows = _reduce_error_spectrum(per_task)
    else:
        rows = [row for chunk in per_task for row in chunk]

    columns = COLUMNS[scenario]
    csv_path = out / RESULTS_NAME
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row[c]) for c in columns])

    manifest = {
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "scenario": scenario,
        "master_seed": config["master_seed"],
        "config": config,
        "config_sha256": config_digest(config),
        "columns": columns,
        "results_csv": RESULTS_NAME,
        "n_rows": len(rows),
    }
    manifest_path = out / MANIFEST_NAME
    with open(manifest_path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return csv_path, manifest_path


def replay(manifest_path: str, out_dir: str, workers: int = 1) -> tuple[Path, Path]:
    """Re-run the scenario recorded in a manifest; must reproduce the CSV.

    Refuses to run if the embedded config no longer matches its recorded
    hash (somebody edited the manifest by hand).
    """
    with open(manifest_path, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    for key in ("scenario", "config", "config_sha256"):
        if key not in manifest:
            raise ConfigError(f"manifest is missing the {key!r} field")
    if config_digest(manifest["config"]) != manifest["config_sha256"]:
        raise ConfigError("manifest config does not match its recorded hash")
    # Validate the stored config through the same path as a fresh run.
    config = _merge(DEFAULTS, manifest["config"], "")
    return run_experiment(manifest["scenario"], config, out_dir, workers=workers)
