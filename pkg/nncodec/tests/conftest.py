"""Shared fixtures: a seeded dataset, the three reference trainings, and a
runner for the link simulator's bridge-transmit scenario.

The trained trio (lambda 0, 1/32768, 1/4096) is expensive (~3 minutes), so it
is built once per session and shared by every test that needs real trained
weights. Everything is seeded; repeated runs on one machine reproduce the
same numbers.
"""

from __future__ import annotations

import csv
import shutil
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

import nncodec as nc

TRIO_EPOCHS = 60
TRIO_SEED = 0
TRIO_SNR_DB = 10.0
DATASET_SEED = 7
DATASET_SIZE = 1000
TRIO_LAMBDAS = {"lam0": 0.0, "weak": 1.0 / 32768.0, "strong": 1.0 / 4096.0}


@pytest.fixture(scope="session")
def dataset_path(tmp_path_factory) -> str:
    path = tmp_path_factory.mktemp("dataset") / "train.npy"
    np.save(path, nc.synthetic_images(DATASET_SEED, DATASET_SIZE))
    return str(path)


@pytest.fixture(scope="session")
def trained_trio(dataset_path):
    """Three models differing only in lambda_papr, plus wall-clock seconds."""
    models = {}
    seconds = {}
    for name, lam in TRIO_LAMBDAS.items():
        cfg = nc.TrainConfig(
            dataset=dataset_path,
            train_snr_db=TRIO_SNR_DB,
            lambda_papr=lam,
            epochs=TRIO_EPOCHS,
            batch_size=32,
            seed=TRIO_SEED,
        )
        start = time.time()
        model, _ = nc.train(cfg)
        seconds[name] = time.time() - start
        models[name] = model
    return models, seconds


@pytest.fixture(scope="session")
def link_cli() -> str:
    exe = shutil.which("semlink")
    if exe is None:
        pytest.fail(
            "the link simulator CLI (semlink) is not on PATH; "
            "install the simulator package before running this suite"
        )
    return exe


@pytest.fixture()
def bridge_runner(link_cli, tmp_path):
    """Callable transmitting one symbol file through the link simulator.

    Returns the results row (dict of floats/strings) with an extra
    "received" key holding the path of the received symbol file.
    """
    counter = [0]

    def run(sym_path: str, **overrides) -> dict:
        counter[0] += 1
        workdir = tmp_path / f"tx{counter[0]:04d}"
        workdir.mkdir()
        lines = ["bridge_transmit:", f"  input: {sym_path}"]
        for key, value in overrides.items():
            if value is None:
                value = "null"
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"  {key}: {value}")
        cfg_path = workdir / "config.yaml"
        cfg_path.write_text("\n".join(lines) + "\n")
        out_dir = workdir / "out"
        subprocess.run(
            [
                "semlink", "run", "--scenario", "bridge_transmit",
                "--config", str(cfg_path), "--out", str(out_dir),
            ],
            check=True,
            capture_output=True,
            text=True,
        )
        with open(out_dir / "results.csv") as fh:
            row = dict(next(csv.DictReader(fh)))
        row["received"] = str(out_dir / "received.smsy")
        return row

    return run


def pytest_make_parametrize_id(config, val, argname):
    if isinstance(val, float):
        return f"{argname}={val:g}"
    return None


def write_images_npy(images: np.ndarray, path: Path) -> str:
    np.save(path, images)
    return str(path)
