"""OFDM waveform synthesis for the PAPR training penalty.

The link transmits symbols in consecutive 72-tone groups on a 128-point
unitary IFFT grid (DC unused, 36 bins each side), so the amplifier sees one
time-domain body per group. The penalty must look at exactly those bodies:
shaping any other grouping would not survive the trip through the real
transmitter. The torch path keeps everything differentiable and smooths the
peak with log-sum-exp; the numpy path is the hard measurement used for
evaluation and tests.
"""

from __future__ import annotations

import numpy as np
import torch

FFT_SIZE = 128
TONES_PER_BODY = 72
SMOOTH_TEMPERATURE = 100.0

# negative-frequency half first, then positive; DC and the guard band stay empty
USED_BINS = np.concatenate(
    [
        np.arange(FFT_SIZE - TONES_PER_BODY // 2, FFT_SIZE),
        np.arange(1, TONES_PER_BODY // 2 + 1),
    ]
)


def _group_bodies(n_symbols: int) -> int:
    if n_symbols <= 0:
        raise ValueError("need at least one symbol")
    return -(-n_symbols // TONES_PER_BODY)


def waveform_torch(symbols: torch.Tensor) -> torch.Tensor:
    """Time-domain bodies of a batch of symbol vectors, differentiably.

    `symbols` is complex of shape (batch, n); the tail body is zero padded
    when n is not a multiple of 72. Returns (batch, n_bodies, 128) complex.
    """
    if symbols.ndim != 2 or not symbols.is_complex():
        raise ValueError("symbols must be a complex (batch, n) tensor")
    batch, n = symbols.shape
    n_bodies = _group_bodies(n)
    padded = torch.zeros(batch, n_bodies * TONES_PER_BODY, dtype=symbols.dtype, device=symbols.device)
    padded[:, :n] = symbols
    grouped = padded.view(batch, n_bodies, TONES_PER_BODY)
    freq = torch.zeros(batch, n_bodies, FFT_SIZE, dtype=symbols.dtype, device=symbols.device)
    freq[:, :, torch.from_numpy(USED_BINS).to(symbols.device)] = grouped
    return torch.fft.ifft(freq, norm="ortho", dim=2)


def papr_loss(symbols: torch.Tensor, temperature: float = SMOOTH_TEMPERATURE) -> torch.Tensor:
    """Batch-mean smooth PAPR (linear ratio) of the per-image waveforms.

    Per image: smooth-max of |x|^2 over all its body samples divided by the
    mean power. The hard max has no useful gradient at the argmax sample
    alone, so it is approximated by (1/T) log sum exp(T |x|^2), which upper
    bounds the max and tightens as T grows; at T=100 the bias stays below
    log(1024)/100, a few percent of a typical peak.
    """
    x = waveform_torch(symbols)
    power = x.real**2 + x.imag**2
    flat = power.reshape(power.shape[0], -1)
    smooth_peak = torch.logsumexp(flat * temperature, dim=1) / temperature
    mean_power = flat.mean(dim=1)
    return (smooth_peak / mean_power).mean()


def waveform_numpy(symbols: np.ndarray) -> np.ndarray:
    """Hard (non-differentiable) counterpart of waveform_torch."""
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    n_bodies = _group_bodies(symbols.size)
    padded = np.zeros(n_bodies * TONES_PER_BODY, dtype=np.complex128)
    padded[: symbols.size] = symbols
    freq = np.zeros((n_bodies, FFT_SIZE), dtype=np.complex128)
    freq[:, USED_BINS] = padded.reshape(n_bodies, TONES_PER_BODY)
    return np.fft.ifft(freq, norm="ortho", axis=1)


def measure_papr_p95(symbols: np.ndarray) -> float:
    """95th percentile of per-body PAPR in dB, full 72-tone bodies only.

    1D input is one continuous symbol stream. 2D input is a batch of
    independent vectors (one image each): bodies are grouped within each row,
    the way the link frames a single image per transmission. Ragged tail
    bodies are dropped either way: their artificially low power would report
    a PAPR that no transmitted body has.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if symbols.ndim == 1:
        symbols = symbols[np.newaxis]
    if symbols.ndim != 2:
        raise ValueError("symbols must be a 1D stream or a (batch, n) array")
    n_full = symbols.shape[1] // TONES_PER_BODY
    if n_full == 0:
        raise ValueError(f"need at least {TONES_PER_BODY} symbols for one full body")
    bodies = symbols[:, : n_full * TONES_PER_BODY].reshape(-1, TONES_PER_BODY)
    freq = np.zeros((bodies.shape[0], FFT_SIZE), dtype=np.complex128)
    freq[:, USED_BINS] = bodies
    x = np.fft.ifft(freq, norm="ortho", axis=1)
    power = np.abs(x) ** 2
    papr_db = 10.0 * np.log10(power.max(axis=1) / power.mean(axis=1))
    return float(np.percentile(papr_db, 95.0))
