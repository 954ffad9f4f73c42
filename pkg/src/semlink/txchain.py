"""Transmit chain: DAC conditioning, OFDM modulation, preamble, PAPR.

Pipeline order in `build_frame`: normalize/clip -> fixed-point quantize ->
shuffle -> grid mapping -> unitary IFFT with cyclic prefix -> Zadoff-Chu
preamble -> optional power-amplifier model over the whole frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .grid import GridMap, OfdmParams, PilotSequence, ResourceGrid, build_grid_map, map_symbols, used_bin_indices
from .interleave import ShufflePlan, shuffle

if TYPE_CHECKING:
    from .channel import PaParams


@dataclass(frozen=True)
class TxConfig:
    """Front-end settings of the transmitter.

    `norm_factor` is the divisor applied before clipping to [-1, 1] per I/Q
    component (the DAC range convention). `quant_bits` = 0 disables
    quantization. The preamble is a length `zc_len` Zadoff-Chu sequence with
    root `zc_root`; each stream sends its own cyclic shift.
    """

    norm_factor: float = 3.0
    quant_bits: int = 14
    clip_limit: float = 1.0
    zc_root: int = 25
    zc_len: int = 127
    pa: "PaParams | None" = None

    def __post_init__(self) -> None:
        if self.norm_factor <= 0:
            raise ValueError("norm_factor must be positive")
        if self.quant_bits != 0 and not 2 <= self.quant_bits <= 24:
            raise ValueError("quant_bits must be 0 (off) or in [2, 24]")
        if self.clip_limit != 1.0:
            raise ValueError("clip_limit is fixed at 1.0")


@dataclass(frozen=True)
class FrameLayout:
    """Sample spans of a frame: preamble then n_symbols CP+body symbols."""

    preamble_len: int
    n_symbols: int
    fft_size: int
    cp_len: int

    @property
    def symbol_len(self) -> int:
        return self.fft_size + self.cp_len

    @property
    def n_samples(self) -> int:
        return self.preamble_len + self.n_symbols * self.symbol_len

    def symbol_slice(self, i: int) -> slice:
        """Full span (CP included) of symbol i."""
        start = self.preamble_len + i * self.symbol_len
        return slice(start, start + self.symbol_len)

    def body_slice(self, i: int) -> slice:
        """FFT-body span (CP stripped) of symbol i."""
        start = self.preamble_len + i * self.symbol_len + self.cp_len
        return slice(start, start + self.fft_size)


@dataclass
class TimeFrame:
    """Baseband time samples of all streams plus the span layout."""

    samples: np.ndarray  # (n_streams, n_samples) complex128
    layout: FrameLayout

    def __post_init__(self) -> None:
        if self.samples.ndim != 2:
            raise ValueError("samples must be (streams, samples)")
        if self.samples.shape[1] != self.layout.n_samples:
            raise ValueError(
                f"sample count {self.samples.shape[1]} does not tile the layout "
                f"({self.layout.n_samples} expected)"
            )


def normalize_clip(symbols: np.ndarray, norm_factor: float) -> np.ndarray:
    """Divide by `norm_factor` and clamp each I/Q component to [-1, 1]."""
    if norm_factor <= 0:
        raise ValueError("norm_factor must be positive")
    symbols = np.asarray(symbols, dtype=np.complex128)
    if not np.all(np.isfinite(symbols)):
        raise ValueError("input contains non-finite values")
    scaled = symbols / norm_factor
    return np.clip(scaled.real, -1.0, 1.0) + 1j * np.clip(scaled.imag, -1.0, 1.0)


def quantize_fixed_point(symbols: np.ndarray, bits: int) -> np.ndarray:
    """Mid-tread uniform quantizer over [-1, 1] per I/Q component.

    q(v) = round(v * m) / m with m = 2**(bits-1) - 1, so 0 is a level and the
    full scale +-1 is representable exactly. bits = 0 passes through.
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    if bits == 0:
        return symbols.copy()
    if not 2 <= bits <= 24:
        raise ValueError("bits must be 0 (off) or in [2, 24]")
    if np.any(np.abs(symbols.real) > 1.0) or np.any(np.abs(symbols.imag) > 1.0):
        raise ValueError("quantizer input must lie in [-1, 1]; normalize first")
    m = float(2 ** (bits - 1) - 1)
    return (np.round(symbols.real * m) + 1j * np.round(symbols.imag * m)) / m


def zadoff_chu(root: int, length: int) -> np.ndarray:
    """Zadoff-Chu sequence x[n] = exp(-j pi u n (n+1) / L) for odd L."""
    if length < 3 or length % 2 == 0:
        raise ValueError("length must be odd and >= 3")
    if not 0 < root < length:
        raise ValueError("root must satisfy 0 < root < length")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root {root} is not coprime with length {length}")
    n = np.arange(length)
    return np.exp(-1j * np.pi * root * n * (n + 1) / length)


def make_preamble(cfg: TxConfig, n_streams: int) -> np.ndarray:
    """Per-stream preamble: cyclic shifts of one Zadoff-Chu root sequence.

    Stream s sends the sequence rolled by s * floor(L / n_streams), keeping
    the per-stream correlation peaks separable at the receiver.
    """
    root_seq = zadoff_chu(cfg.zc_root, cfg.zc_len)
    step = cfg.zc_len // n_streams
    return np.stack([np.roll(root_seq, s * step) for s in range(n_streams)])


def ofdm_modulate(grid: ResourceGrid) -> TimeFrame:
    """Unitary IFFT of every symbol with cyclic-prefix insertion, no preamble."""
    params = grid.params
    n_planes, n_symbols, _ = grid.cells.shape
    freq = np.zeros((n_planes, n_symbols, params.fft_size), dtype=np.complex128)
    freq[:, :, used_bin_indices(params)] = grid.cells
    body = np.fft.ifft(freq, norm="ortho", axis=2)
    with_cp = np.concatenate([body[:, :, -params.cp_len :], body], axis=2) if params.cp_len else body
    samples = with_cp.reshape(n_planes, n_symbols * params.symbol_len)
    layout = FrameLayout(
        preamble_len=0, n_symbols=n_symbols, fft_size=params.fft_size, cp_len=params.cp_len
    )
    return TimeFrame(samples=samples, layout=layout)


def tx_reference(symbols: np.ndarray, cfg: TxConfig) -> np.ndarray:
    """The physically transmitted payload values: normalized, clipped, quantized.

    This is the reference stream EVM is computed against.
    """
    return quantize_fixed_point(normalize_clip(symbols, cfg.norm_factor), cfg.quant_bits)


def build_frame(
    symbols: np.ndarray,
    cfg: TxConfig,
    params: OfdmParams,
    plan: ShufflePlan,
    pilots: PilotSequence,
) -> tuple[TimeFrame, GridMap]:
    """Run the whole transmit pipeline for one payload.

    Returns the time frame (preamble prepended, PA applied when configured)
    and the grid map used, which the receiver rebuilds deterministically from
    the payload length.
    """
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    if plan.length != symbols.size:
        raise ValueError("shuffle plan length does not match payload length")
    conditioned = tx_reference(symbols, cfg)
    gmap = build_grid_map(params, symbols.size)
    grid = map_symbols(shuffle(conditioned, plan), gmap, pilots)
    body = ofdm_modulate(grid)
    preamble = make_preamble(cfg, params.n_streams)
    samples = np.concatenate([preamble, body.samples], axis=1)
    layout = FrameLayout(
        preamble_len=cfg.zc_len,
        n_symbols=body.layout.n_symbols,
        fft_size=params.fft_size,
        cp_len=params.cp_len,
    )
    if cfg.pa is not None:
        from .channel import pa_rapp

        samples = pa_rapp(samples, cfg.pa)
    return TimeFrame(samples=samples, layout=layout), gmap


@dataclass(frozen=True)
class PaprStats:
    """Peak-to-average power percentiles over all (stream, symbol) pairs."""

    p50_db: float
    p95_db: float
    p99_db: float
    n_symbols: int
    n_excluded: int
    per_symbol_db: np.ndarray | None = None


def measure_papr(
    frame: TimeFrame, per_symbol: bool = False, reference: str = "symbol"
) -> PaprStats:
    """PAPR of every OFDM symbol body: max |x|^2 over a mean-power reference.

    reference "symbol" divides each peak by that symbol's own mean power
    (the classic per-symbol CCDF quantity); "frame" divides by the mean
    power of the whole measured span, which is what sets an amplifier's
    operating point and so exposes symbol-to-symbol power fluctuation.
    The preamble and the cyclic prefixes are excluded. Symbols with zero
    power cannot define a per-symbol ratio; they are dropped and counted.
    """
    if reference not in ("symbol", "frame"):
        raise ValueError(f"unknown reference {reference!r}")
    layout = frame.layout
    bodies = np.stack(
        [frame.samples[:, layout.body_slice(i)] for i in range(layout.n_symbols)], axis=1
    )  # (streams, symbols, fft)
    power = np.abs(bodies) ** 2
    mean_p = power.mean(axis=2)
    peak_p = power.max(axis=2)
    flat_mean = mean_p.ravel()
    flat_peak = peak_p.ravel()
    alive = flat_mean > 0
    n_excluded = int(np.sum(~alive))
    if not np.any(alive):
        raise ValueError("no symbol with nonzero power; PAPR undefined")
    if reference == "frame":
        denom = np.full(np.sum(alive), power.mean())
    else:
        denom = flat_mean[alive]
    papr_db = 10.0 * np.log10(flat_peak[alive] / denom)
    p50, p95, p99 = np.percentile(papr_db, [50.0, 95.0, 99.0])
    return PaprStats(
        p50_db=float(p50),
        p95_db=float(p95),
        p99_db=float(p99),
        n_symbols=int(np.sum(alive)),
        n_excluded=n_excluded,
        per_symbol_db=papr_db if per_symbol else None,
    )
