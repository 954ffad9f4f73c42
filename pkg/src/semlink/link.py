"""One-call transmit-channel-receive composition used by experiments and tests."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelRealization, awgn, derive_seed, frequency_response, propagate
from .grid import OfdmParams, make_pilot_sequence
from .interleave import ShufflePlan, identity_plan, make_plan
from .rxchain import (
    ChannelEstimate,
    RxReport,
    compute_evm,
    estimate_channel,
    estimate_noise_power,
    ofdm_demodulate,
    recover_payload,
    synchronize,
    zf_combine,
    zf_noise_enhancement,
)
from .txchain import (
    FrameLayout,
    PaprStats,
    TimeFrame,
    TxConfig,
    build_frame,
    measure_papr,
    tx_reference,
)


@dataclass(frozen=True)
class LinkConfig:
    """Everything that defines one link run except the channel realization.

    noise_mode: "snr" references the noise variance to the mean received
    payload-cell power so the configured SNR is the per-data-cell SNR;
    "fixed_power" sets the absolute noise variance per complex sample (used
    for amplifier sweeps); "off" disables noise. csi: "estimated" runs the
    pilot estimator, "perfect" evaluates the true channel response.
    """

    params: OfdmParams = OfdmParams()
    tx: TxConfig = TxConfig()
    pilot_seed: int = 1001
    shuffle_seed: int | None = None
    csi: str = "estimated"
    noise_mode: str = "snr"
    snr_db: float = 20.0
    noise_power: float = 0.0

    def __post_init__(self) -> None:
        if self.csi not in ("estimated", "perfect"):
            raise ValueError(f"unknown csi mode {self.csi!r}")
        if self.noise_mode not in ("snr", "fixed_power", "off"):
            raise ValueError(f"unknown noise mode {self.noise_mode!r}")


@dataclass
class LinkResult:
    """Receiver report plus transmit-side measurements for one frame."""

    report: RxReport
    papr: PaprStats
    plan: ShufflePlan
    tx_ref: np.ndarray = field(repr=False)


def perfect_estimate(
    ch: ChannelRealization, params: OfdmParams, n_symbols: int
) -> ChannelEstimate:
    """Oracle CSI from the true taps (drift evaluated at each symbol body)."""
    h0 = frequency_response(ch, params)  # (used, rx, tx)
    if ch.taps_end is None:
        h = np.broadcast_to(h0, (n_symbols, *h0.shape)).copy()
    else:
        h1 = frequency_response(ch, params, end=True)
        w = (np.arange(n_symbols) + 0.5) / n_symbols
        h = (1.0 - w)[:, None, None, None] * h0 + w[:, None, None, None] * h1
    valid = np.ones((n_symbols, params.used_subcarriers), dtype=bool)
    return ChannelEstimate(h=h, valid=valid, pilot_symbols=np.array([], dtype=np.int64))


def run_link(
    symbols: np.ndarray,
    cfg: LinkConfig,
    ch: ChannelRealization,
    noise_seed: int | None = None,
) -> LinkResult:
    """Transmit one payload through the channel and recover it.

    The receiver synchronizes on the preamble, so the reported timing offset
    doubles as a sanity check (0 for a frame that was not delayed).
    """
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    params = cfg.params
    plan = (
        identity_plan(symbols.size)
        if cfg.shuffle_seed is None
        else make_plan(cfg.shuffle_seed, symbols.size)
    )
    pilots = make_pilot_sequence(cfg.pilot_seed, params)
    frame, gmap = build_frame(symbols, cfg.tx, params, plan, pilots)
    papr = measure_papr(frame)

    clean = propagate(frame.samples, ch)
    if cfg.noise_mode == "off":
        received = clean
    else:
        seed = derive_seed("link-noise", ch.seed) if noise_seed is None else noise_seed
        if cfg.noise_mode == "fixed_power":
            if cfg.noise_power <= 0:
                raise ValueError("fixed_power mode needs a positive noise_power")
            received = awgn(clean, 0.0, cfg.noise_power, seed)
        else:
            ref = _payload_cell_power(clean, frame.layout, gmap, params)
            received = awgn(clean, cfg.snr_db, ref, seed)

    offset = synchronize(received, cfg.tx, params)
    body_start = offset + cfg.tx.zc_len
    body_len = gmap.n_symbols * params.symbol_len
    shortfall = body_start + body_len - received.shape[1]
    if shortfall > params.cp_len:
        raise ValueError("frame truncated: not enough samples after the sync point")
    if shortfall > 0:
        # A late lock can run past the captured span by up to one CP; the
        # missing samples are the channel's decay tail, extended as zeros.
        received = np.pad(received, ((0, 0), (0, shortfall)))
    body = received[:, body_start : body_start + body_len]
    layout = FrameLayout(
        preamble_len=0, n_symbols=gmap.n_symbols, fft_size=params.fft_size, cp_len=params.cp_len
    )
    grid_rx = ofdm_demodulate(TimeFrame(samples=body, layout=layout), params)

    if cfg.csi == "perfect":
        est = perfect_estimate(ch, params, gmap.n_symbols)
    else:
        est = estimate_channel(grid_rx, pilots, params)
    eq, flagged = zf_combine(grid_rx, est)

    recovered = recover_payload(eq, gmap, plan, cfg.tx.norm_factor)
    ref_syms = tx_reference(symbols, cfg.tx)
    evm, rx_snr_db, per_pos = compute_evm(ref_syms, recovered / cfg.tx.norm_factor)

    inv = np.empty(plan.length, dtype=np.int64)
    inv[plan.permutation] = np.arange(plan.length)
    physical = gmap.entries[inv]

    if cfg.csi == "estimated":
        noise_var = estimate_noise_power(grid_rx, params)
    elif cfg.noise_mode == "snr":
        noise_var = ref * 10.0 ** (-cfg.snr_db / 10.0)
    else:
        noise_var = cfg.noise_power if cfg.noise_mode == "fixed_power" else 0.0
    enh = zf_noise_enhancement(est)
    noise_est = noise_var * enh[physical[:, 1], physical[:, 2], physical[:, 0]]

    per_sc = np.full(params.used_subcarriers, np.nan)
    per_stream = np.full(params.n_streams, np.nan)
    sc_sum = np.zeros(params.used_subcarriers)
    sc_cnt = np.zeros(params.used_subcarriers, dtype=np.int64)
    st_sum = np.zeros(params.n_streams)
    st_cnt = np.zeros(params.n_streams, dtype=np.int64)
    np.add.at(sc_sum, physical[:, 2], per_pos)
    np.add.at(sc_cnt, physical[:, 2], 1)
    np.add.at(st_sum, physical[:, 0], per_pos)
    np.add.at(st_cnt, physical[:, 0], 1)
    np.divide(sc_sum, sc_cnt, out=per_sc, where=sc_cnt > 0)
    np.divide(st_sum, st_cnt, out=per_stream, where=st_cnt > 0)

    report = RxReport(
        recovered=recovered,
        rx_snr_db=rx_snr_db,
        evm_rms=evm,
        per_subcarrier_err=per_sc,
        per_stream_err=per_stream,
        per_position_err=per_pos,
        timing_offset=offset,
        n_flagged_cells=int(flagged.sum()),
        gmap=gmap,
        physical_positions=physical,
        noise_power_est=noise_var,
        per_position_noise_est=noise_est,
    )
    return LinkResult(report=report, papr=papr, plan=plan, tx_ref=ref_syms)


def _payload_cell_power(
    clean: np.ndarray,
    layout: FrameLayout,
    gmap,
    params: OfdmParams,
) -> float:
    """Mean received power of the payload-loaded cells, noise-free.

    Measured on the demodulated noiseless signal over the (symbol, subcarrier)
    cells where every stream carries payload, averaged across receive
    antennas; a rx-plane cell mixes all streams, so cells where some stream
    transmits padding zeros would dilute the reference on a partially filled
    grid. When the payload is too small to co-load any cell, falls back to
    the cells with at least one stream's payload. Referencing the noise here
    makes the configured SNR equal the per-data-cell SNR, independent of FFT
    occupancy and preamble/pilot power.
    """
    frame = TimeFrame(samples=clean, layout=layout)
    grid = ofdm_demodulate(frame, params)
    ent = gmap.entries[: gmap.n_payload]
    cnt = np.zeros((gmap.n_symbols, params.used_subcarriers), dtype=np.int64)
    np.add.at(cnt, (ent[:, 1], ent[:, 2]), 1)
    mask = cnt == params.n_streams
    if not mask.any():
        mask = cnt > 0
    power = float(np.mean(np.abs(grid.cells[:, mask]) ** 2))
    if power <= 0:
        raise ValueError("received payload cells have zero power")
    return power
