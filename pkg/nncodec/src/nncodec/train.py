"""Training, checkpoints, and the symbol export/decode entry points.

The loss is pixel MSE through a differentiable AWGN channel plus an optional
PAPR penalty on the OFDM waveform of each image's symbols. The penalty is
aggregated as the batch mean of per-image smooth PAPR (linear ratio); that
choice is recorded in the run header of every training log.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn.functional as F

from .bridge import read_symbols, write_symbols
from .data import load_images
from .model import (
    SYMBOLS_PER_IMAGE,
    SymbolCodec,
    awgn,
    build_model,
    images_to_tensor,
    tensor_to_images,
)
from .waveform import measure_papr_p95, papr_loss

ALLOWED_SNRS = (0.0, 5.0, 10.0, 15.0, 20.0)
ALLOWED_LAMBDAS = (0.0, 1.0 / 32768.0, 1.0 / 4096.0)
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """One training run, fully determined by these fields and the seed."""

    dataset: str
    train_snr_db: float = 10.0
    lambda_papr: float = 0.0
    epochs: int = 30
    batch_size: int = 32
    seed: int = 0
    learning_rate: float = 1e-4
    bandwidth_ratio: float = 1.0 / 6.0
    norm_factor: float = 3.0

    def __post_init__(self) -> None:
        if float(self.train_snr_db) not in ALLOWED_SNRS:
            raise ValueError(f"train_snr_db must be one of {ALLOWED_SNRS}")
        if float(self.lambda_papr) not in ALLOWED_LAMBDAS:
            raise ValueError("lambda_papr must be 0, 1/32768, or 1/4096")
        if self.bandwidth_ratio != 1.0 / 6.0:
            raise ValueError("bandwidth_ratio is fixed at 1/6 (512 symbols per image)")
        if self.epochs <= 0 or self.batch_size <= 0:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.norm_factor <= 0:
            raise ValueError("norm_factor must be positive")


def train(cfg: TrainConfig) -> tuple[SymbolCodec, list[dict]]:
    """Run one training and return the model plus per-epoch log records.

    The first log record is a run header (config, backend versions, thread
    count, and the penalty aggregation note); one record follows per epoch
    with the mean MSE, mean penalty value, mean total loss, and the hard
    (non-smoothed) 95th-percentile waveform PAPR of that epoch's symbols.
    """
    images = load_images(cfg.dataset)
    x_all = images_to_tensor(images)
    model = build_model(cfg.seed)
    opt = torch.optim.Adam(model.parameters(), lr=cfg.learning_rate)
    gen = torch.Generator().manual_seed(cfg.seed + 1)
    log: list[dict] = [
        {
            "config": asdict(cfg),
            "n_images": int(x_all.shape[0]),
            "papr_aggregation": "batch mean of per-image smooth PAPR",
            "torch": torch.__version__,
            "threads": torch.get_num_threads(),
        }
    ]
    n = x_all.shape[0]
    for epoch in range(cfg.epochs):
        order = torch.randperm(n, generator=gen)
        mse_sum = 0.0
        papr_sum = 0.0
        loss_sum = 0.0
        hard_paprs = []
        n_batches = 0
        for start in range(0, n, cfg.batch_size):
            x = x_all[order[start : start + cfg.batch_size]]
            recon, sym = model(x, cfg.train_snr_db, gen)
            mse = F.mse_loss(recon, x)
            penalty = papr_loss(sym)
            loss = mse + cfg.lambda_papr * penalty if cfg.lambda_papr else mse
            opt.zero_grad()
            loss.backward()
            opt.step()
            mse_sum += float(mse.detach())
            papr_sum += float(penalty.detach())
            loss_sum += float(loss.detach())
            hard_paprs.append(measure_papr_p95(sym.detach().numpy()))
            n_batches += 1
        log.append(
            {
                "epoch": epoch,
                "mse": mse_sum / n_batches,
                "papr_penalty": papr_sum / n_batches,
                "loss": loss_sum / n_batches,
                "papr_p95_db": float(np.mean(hard_paprs)),
            }
        )
    return model, log


def save_checkpoint(model: SymbolCodec, cfg: TrainConfig, path: str) -> None:
    torch.save(
        {
            "version": CHECKPOINT_VERSION,
            "config": asdict(cfg),
            "state_dict": model.state_dict(),
        },
        path,
    )


def load_checkpoint(path: str) -> tuple[SymbolCodec, TrainConfig]:
    payload = torch.load(path, map_location="cpu", weights_only=True)
    if payload.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('version')}")
    cfg = TrainConfig(**payload["config"])
    model = SymbolCodec()
    model.load_state_dict(payload["state_dict"])
    model.eval()
    return model, cfg


def encode_images(model: SymbolCodec, images: np.ndarray) -> np.ndarray:
    """Encode to a flat complex array, 512 symbols per image, unit power."""
    with torch.no_grad():
        sym = model.encode(images_to_tensor(images))
    return sym.numpy().astype(np.complex128).ravel()


def export_symbols(
    model: SymbolCodec, images: np.ndarray, path: str, norm_factor: float = 3.0
) -> np.ndarray:
    """Encode and write symbols for the link: divide by the norm factor and
    clip each component to the unit box, the transmitter's input contract."""
    sym = encode_images(model, images) / norm_factor
    sym = np.clip(sym.real, -1.0, 1.0) + 1j * np.clip(sym.imag, -1.0, 1.0)
    write_symbols(sym, path)
    return sym


def import_and_decode(
    model: SymbolCodec, path: str, norm_factor: float = 3.0
) -> np.ndarray:
    """Read received symbols, undo the export scaling, decode to images."""
    sym = read_symbols(path) * norm_factor
    if sym.size == 0 or sym.size % SYMBOLS_PER_IMAGE:
        raise ValueError(
            f"symbol count {sym.size} is not a positive multiple of {SYMBOLS_PER_IMAGE}"
        )
    batch = torch.from_numpy(sym.reshape(-1, SYMBOLS_PER_IMAGE)).to(torch.complex64)
    with torch.no_grad():
        out = model.decode(batch)
    return tensor_to_images(out)


def evaluate_psnr(
    model: SymbolCodec, images: np.ndarray, snr_db: float, seed: int
) -> float:
    """Mean-squared reconstruction quality through a plain AWGN channel."""
    gen = torch.Generator().manual_seed(seed)
    x = images_to_tensor(images)
    with torch.no_grad():
        recon = model.decode(awgn(model.encode(x), snr_db, gen))
    mse = float(F.mse_loss(recon, x))
    return 10.0 * float(np.log10(1.0 / mse))
