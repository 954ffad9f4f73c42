"""Receive chain: synchronization, demodulation, estimation, ZF, EVM.

The receiver knows the numerology, the pilot seed, and the payload length; it
rebuilds the grid map and shuffle plan deterministically rather than receiving
side information.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    GridMap,
    OfdmParams,
    PilotSequence,
    ResourceGrid,
    grid_roles,
    pilot_owner,
    pilot_symbol_indices,
    used_bin_indices,
)
from .interleave import ShufflePlan, deshuffle
from .txchain import FrameLayout, TimeFrame, TxConfig, make_preamble

SYNC_PEAK_TO_MEAN_MIN = 4.0
SYNC_LEADING_EDGE_FRACTION = 0.5
ZF_COND_LIMIT = 1e8


class SyncError(RuntimeError):
    """Raised when no plausible preamble correlation peak is found."""


def synchronize(samples: np.ndarray, cfg: TxConfig, params: OfdmParams) -> int:
    """Locate the frame start by Zadoff-Chu cross-correlation.

    Correlates every receive stream against every per-stream preamble shift
    and sums the magnitudes, so the metric peaks regardless of which stream
    dominates. On a multipath channel the strongest correlation lag is the
    strongest tap, not the first one, so the returned offset is the earliest
    lag within one CP length of the peak that still reaches half the peak:
    locking to the leading edge keeps the whole delay spread inside the CP.
    Ties resolve to the smallest lag. A peak-to-mean ratio below 4 is
    treated as "no frame present".
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.complex128))
    refs = make_preamble(cfg, params.n_streams)
    if samples.shape[1] < refs.shape[1]:
        raise SyncError("received stream shorter than the preamble")
    metric = None
    for r in range(samples.shape[0]):
        for s in range(refs.shape[0]):
            c = np.abs(np.correlate(samples[r], refs[s], mode="valid"))
            metric = c if metric is None else metric + c
    peak = int(np.argmax(metric))
    mean = float(np.mean(metric))
    if mean <= 0 or float(metric[peak]) / mean < SYNC_PEAK_TO_MEAN_MIN:
        raise SyncError(
            f"correlation peak-to-mean {float(metric[peak]) / mean if mean else 0.0:.2f} "
            f"below threshold {SYNC_PEAK_TO_MEAN_MIN}"
        )
    lo = max(0, peak - (params.cp_len - 1))
    window = metric[lo : peak + 1]
    edge = int(np.argmax(window >= SYNC_LEADING_EDGE_FRACTION * metric[peak]))
    return lo + edge


def ofdm_demodulate(frame: TimeFrame, params: OfdmParams) -> ResourceGrid:
    """Unitary FFT of every symbol body; returns used-subcarrier cells.

    Planes of the output are the input streams (receive antennas); the role
    array describes the transmit-side layout for the same symbol count.
    """
    layout = frame.layout
    if layout.fft_size != params.fft_size or layout.cp_len != params.cp_len:
        raise ValueError("frame layout does not match params")
    n_planes = frame.samples.shape[0]
    start = layout.preamble_len
    body = frame.samples[:, start : start + layout.n_symbols * layout.symbol_len]
    body = body.reshape(n_planes, layout.n_symbols, layout.symbol_len)[:, :, params.cp_len :]
    freq = np.fft.fft(body, norm="ortho", axis=2)
    cells = freq[:, :, used_bin_indices(params)]
    if layout.n_symbols % params.symbols_per_block == 0:
        roles = grid_roles(params, layout.n_symbols)
    else:
        roles = np.full(cells.shape, -1, dtype=np.int8)
    return ResourceGrid(params=params, cells=cells, roles=roles)


@dataclass
class ChannelEstimate:
    """Per-cell channel matrices: shape (n_symbols, used_subcarriers, n_rx, n_tx)."""

    h: np.ndarray
    valid: np.ndarray
    pilot_symbols: np.ndarray


def estimate_channel(
    grid_rx: ResourceGrid, pilots: PilotSequence, params: OfdmParams
) -> ChannelEstimate:
    """Least-squares pilot estimation with nearest/linear interpolation.

    Per pilot symbol each (rx, tx) response is measured on the subcarriers the
    tx stream owns (H = Y / P, interference-free because the other streams are
    silent there), filled to the remaining subcarriers by nearest neighbour
    (ties toward the lower index), then interpolated linearly across time
    between pilot symbols with constant extension beyond the outermost ones.
    """
    n_rx, n_symbols, n_used = grid_rx.cells.shape
    n_tx = params.n_streams
    p_ts = pilot_symbol_indices(params, n_symbols)
    if len(p_ts) == 0:
        raise ValueError("grid contains no pilot symbols")
    owner = pilot_owner(params)
    k_all = np.arange(n_used)

    h_p = np.zeros((len(p_ts), n_used, n_rx, n_tx), dtype=np.complex128)
    for t in range(n_tx):
        own = k_all[owner == t]
        nearest = own[np.argmin(np.abs(k_all[:, None] - own[None, :]), axis=1)]
        for i, tp in enumerate(p_ts):
            ls = grid_rx.cells[:, tp, own] / pilots.values[t, own]  # (n_rx, n_own)
            h_p[i, own, :, t] = ls.T
            h_p[i, :, :, t] = h_p[i, nearest, :, t]

    h = np.empty((n_symbols, n_used, n_rx, n_tx), dtype=np.complex128)
    for t_sym in range(n_symbols):
        right = int(np.searchsorted(p_ts, t_sym))
        if right == 0:
            h[t_sym] = h_p[0]
        elif right == len(p_ts):
            h[t_sym] = h_p[-1]
        else:
            t0, t1 = int(p_ts[right - 1]), int(p_ts[right])
            w = (t_sym - t0) / (t1 - t0)
            h[t_sym] = (1.0 - w) * h_p[right - 1] + w * h_p[right]
    valid = np.ones((n_symbols, n_used), dtype=bool)
    return ChannelEstimate(h=h, valid=valid, pilot_symbols=p_ts)


def estimate_noise_power(grid_rx: ResourceGrid, params: OfdmParams) -> float:
    """Per-cell noise variance from the repetition of pilot symbols.

    The same pilot values are transmitted on every pilot symbol of the frame,
    so at a fixed (rx, subcarrier) cell the noiseless part repeats while the
    noise does not; the sample variance across pilot symbols estimates the
    per-cell noise variance without knowing the channel. Needs at least two
    pilot symbols (returns 0.0 otherwise). A channel that drifts within the
    frame inflates the estimate by the drift energy.
    """
    n_rx, n_symbols, n_used = grid_rx.cells.shape
    p_ts = pilot_symbol_indices(params, n_symbols)
    if len(p_ts) < 2:
        return 0.0
    cells = grid_rx.cells[:, p_ts, :]  # (n_rx, n_pilot, n_used)
    resid = cells - cells.mean(axis=1, keepdims=True)
    dof = n_rx * n_used * (len(p_ts) - 1)
    return float(np.sum(np.abs(resid) ** 2) / dof)


def zf_noise_enhancement(
    est: ChannelEstimate, cond_limit: float = ZF_COND_LIMIT
) -> np.ndarray:
    """Post-combining noise amplification per (symbol, subcarrier, stream).

    Zero-forcing turns white per-cell noise of variance s2 into per-stream
    noise of variance s2 * diag((H^H H)^-1); this returns that diagonal for
    every cell, shape (n_symbols, used_subcarriers, n_streams). Cells that
    zf_combine would flag (ill-conditioned) return inf: their output is
    zeroed, so the symbol there is lost rather than amplified.
    """
    h = est.h
    sv = np.linalg.svd(h, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = sv[..., 0] / sv[..., -1]
    flagged = ~np.isfinite(cond) | (cond > cond_limit)
    a = np.conj(np.transpose(h, (0, 1, 3, 2))) @ h
    if np.any(flagged):
        a = a.copy()
        a[flagged] = np.eye(h.shape[-1])
    inv = np.linalg.inv(a)
    enh = np.einsum("tkii->tki", inv).real.copy()
    enh[flagged] = np.inf
    return enh


def zf_combine(
    grid_rx: ResourceGrid,
    est: ChannelEstimate,
    cond_limit: float = ZF_COND_LIMIT,
) -> tuple[ResourceGrid, np.ndarray]:
    """Zero-forcing combining per cell: x_hat = (H^H H)^-1 H^H y.

    Cells whose channel matrix condition number exceeds `cond_limit` (or is
    singular) are flagged and their outputs zeroed rather than amplified.
    Returns the equalized grid (one plane per tx stream) and the flag mask of
    shape (n_symbols, used_subcarriers).
    """
    h = est.h  # (T, K, R, Tx)
    n_symbols, n_used, n_rx, n_tx = h.shape
    if grid_rx.cells.shape != (n_rx, n_symbols, n_used):
        raise ValueError("received grid shape does not match estimate")
    y = np.transpose(grid_rx.cells, (1, 2, 0))[..., np.newaxis]  # (T, K, R, 1)

    sv = np.linalg.svd(h, compute_uv=False)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = sv[..., 0] / sv[..., -1]
    flagged = ~np.isfinite(cond) | (cond > cond_limit)

    hh = np.conj(np.transpose(h, (0, 1, 3, 2)))  # (T, K, Tx, R)
    a = hh @ h
    b = hh @ y
    if np.any(flagged):
        a = a.copy()
        a[flagged] = np.eye(n_tx)
        b = b.copy()
        b[flagged] = 0.0
    x = np.linalg.solve(a, b)[..., 0]  # (T, K, Tx)
    x[flagged] = 0.0
    cells = np.transpose(x, (2, 0, 1))  # (Tx, T, K)
    eq = ResourceGrid(params=grid_rx.params, cells=cells)
    return eq, flagged


def recover_payload(
    grid_eq: ResourceGrid,
    gmap: GridMap,
    plan: ShufflePlan,
    norm_factor: float,
) -> np.ndarray:
    """Demap, deshuffle, and undo the normalization divisor.

    Clipping and quantization are not invertible; the result is the chain's
    best estimate of the conditioned payload scaled back to codec units.
    """
    from .grid import demap_symbols

    shuffled = demap_symbols(grid_eq, gmap)
    return deshuffle(shuffled, plan) * norm_factor


def compute_evm(tx_ref: np.ndarray, rx: np.ndarray) -> tuple[float, float, np.ndarray]:
    """Error vector magnitude against the physically transmitted values.

    Returns (evm_rms, rx_snr_db, per-position squared errors). Rx SNR is
    -20 log10(EVM), capped at +80 dB; a zero-power reference is an error.
    """
    tx_ref = np.asarray(tx_ref).ravel()
    rx = np.asarray(rx).ravel()
    if tx_ref.shape != rx.shape:
        raise ValueError("reference and received payloads differ in length")
    ref_power = float(np.sum(np.abs(tx_ref) ** 2))
    if ref_power <= 0:
        raise ValueError("reference has zero power; EVM undefined")
    err = np.abs(rx - tx_ref) ** 2
    evm = float(np.sqrt(err.sum() / ref_power))
    if evm <= 10.0 ** (-80.0 / 20.0):
        snr_db = 80.0
    else:
        snr_db = min(-20.0 * np.log10(evm), 80.0)
    return evm, float(snr_db), err


@dataclass
class RxReport:
    """Everything the receiver measured for one frame."""

    recovered: np.ndarray
    rx_snr_db: float
    evm_rms: float
    per_subcarrier_err: np.ndarray
    per_stream_err: np.ndarray
    per_position_err: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    timing_offset: int = 0
    n_flagged_cells: int = 0
    gmap: GridMap = field(repr=False, default=None)  # type: ignore[assignment]
    physical_positions: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
    # Receiver-side noise knowledge, in the same normalized units as
    # per_position_err (multiply by norm_factor**2 for recovered-symbol units).
    noise_power_est: float = 0.0
    per_position_noise_est: np.ndarray = field(repr=False, default=None)  # type: ignore[assignment]
