"""Channel models: block-fading MIMO taps, AWGN, and a Rapp PA.

Channels are sample-spaced FIR filters per (rx, tx) antenna pair, constant
over a frame. A linear-drift variant interpolates the taps from a start to an
end value across the frame; it exists to exercise the receiver's time
interpolation and is not a physical mobility model.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

from .grid import OfdmParams, used_bin_indices
from .txchain import TimeFrame


def derive_seed(*parts: object) -> int:
    """Stable 64-bit seed from a label path (hash of the joined parts)."""
    text = "/".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


@dataclass(frozen=True)
class PaParams:
    """Rapp AM/AM model: out = g x / (1 + (|g x| / sat)^(2p))^(1/(2p)).

    `backoff_db` sets the input scale g = 10**(-backoff/20); negative values
    drive the amplifier deeper into saturation. AM/PM is not modelled.
    """

    smoothness: float = 3.0
    sat: float = 1.0
    backoff_db: float = 0.0

    def __post_init__(self) -> None:
        if self.smoothness <= 0:
            raise ValueError("smoothness must be positive")
        if self.sat <= 0:
            raise ValueError("sat must be positive")


def pa_rapp(samples: np.ndarray, pa: PaParams) -> np.ndarray:
    """Apply the Rapp nonlinearity sample-wise; phase is preserved."""
    x = np.asarray(samples, dtype=np.complex128) * 10.0 ** (-pa.backoff_db / 20.0)
    r = np.abs(x)
    gain = (1.0 + (r / pa.sat) ** (2.0 * pa.smoothness)) ** (-1.0 / (2.0 * pa.smoothness))
    return x * gain


@dataclass(frozen=True)
class ChannelProfile:
    """Statistical family to draw realizations from.

    kinds: "identity" (diagonal unit gains, deterministic), "flat" (one
    Rayleigh tap per pair), "exp_pdp" (n_taps Rayleigh taps whose expected
    powers fall by decay_db_per_tap each, normalized to unit total power).
    """

    kind: str = "flat"
    n_taps: int = 1
    decay_db_per_tap: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("identity", "flat", "exp_pdp"):
            raise ValueError(f"unknown channel profile kind {self.kind!r}")
        if self.kind == "exp_pdp" and self.n_taps < 1:
            raise ValueError("exp_pdp needs n_taps >= 1")


def exp_pdp_profile(n_taps: int, decay_db_per_tap: float) -> ChannelProfile:
    return ChannelProfile(kind="exp_pdp", n_taps=n_taps, decay_db_per_tap=decay_db_per_tap)


@dataclass(frozen=True)
class ChannelRealization:
    """One drawn channel: FIR taps per antenna pair, plus the noise setting.

    `taps` has shape (n_rx, n_tx, n_taps). `noise_snr_db` = +inf means no
    noise. When `taps_end` is set the taps drift linearly from `taps` to
    `taps_end` across the frame.
    """

    taps: np.ndarray
    noise_snr_db: float = math.inf
    seed: int = 0
    taps_end: np.ndarray | None = None

    def __post_init__(self) -> None:
        if self.taps.ndim != 3:
            raise ValueError("taps must be (n_rx, n_tx, n_taps)")
        if self.taps_end is not None and self.taps_end.shape != self.taps.shape:
            raise ValueError("taps_end shape must match taps")

    @property
    def n_rx(self) -> int:
        return self.taps.shape[0]

    @property
    def n_tx(self) -> int:
        return self.taps.shape[1]

    @property
    def n_taps(self) -> int:
        return self.taps.shape[2]


def identity_channel(n_streams: int, noise_snr_db: float = math.inf, seed: int = 0) -> ChannelRealization:
    """Unit diagonal single-tap channel: output equals input (plus noise)."""
    taps = np.eye(n_streams, dtype=np.complex128)[:, :, np.newaxis]
    return ChannelRealization(taps=taps, noise_snr_db=noise_snr_db, seed=seed)


def draw_channel(
    profile: ChannelProfile,
    n_tx: int,
    n_rx: int,
    seed: int,
    noise_snr_db: float = math.inf,
) -> ChannelRealization:
    """Draw one block-fading realization of the profile.

    Tap k of every pair is complex Gaussian with expected power p_k
    proportional to 10**(-k * decay / 10); the p_k sum to 1, so the expected
    channel power per (rx, tx) pair is 1.
    """
    if profile.kind == "identity":
        if n_tx != n_rx:
            raise ValueError("identity profile needs n_tx == n_rx")
        return identity_channel(n_tx, noise_snr_db=noise_snr_db, seed=seed)
    if profile.kind == "flat":
        powers = np.ones(1)
    else:
        powers = 10.0 ** (-profile.decay_db_per_tap * np.arange(profile.n_taps) / 10.0)
    powers = powers / powers.sum()
    rng = np.random.Generator(np.random.Philox(key=seed))
    shape = (n_rx, n_tx, len(powers))
    taps = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)
    taps = taps * np.sqrt(powers)
    return ChannelRealization(taps=taps, noise_snr_db=noise_snr_db, seed=seed)


def awgn(
    samples: np.ndarray,
    snr_db: float,
    signal_power_ref: float,
    seed: int,
) -> np.ndarray:
    """Add circularly-symmetric complex Gaussian noise.

    Noise variance per complex sample is signal_power_ref / 10**(snr_db/10),
    split evenly between I and Q. snr_db = +inf returns a copy.
    """
    samples = np.asarray(samples, dtype=np.complex128)
    if math.isinf(snr_db) and snr_db > 0:
        return samples.copy()
    if signal_power_ref <= 0:
        raise ValueError("signal_power_ref must be positive")
    var = signal_power_ref / 10.0 ** (snr_db / 10.0)
    rng = np.random.Generator(np.random.Philox(key=seed))
    noise = rng.standard_normal(samples.shape) + 1j * rng.standard_normal(samples.shape)
    return samples + noise * math.sqrt(var / 2.0)


def propagate(samples: np.ndarray, ch: ChannelRealization) -> np.ndarray:
    """Convolve per antenna pair (causal FIR, output truncated to input length)."""
    samples = np.asarray(samples, dtype=np.complex128)
    if samples.ndim != 2 or samples.shape[0] != ch.n_tx:
        raise ValueError(f"samples must be ({ch.n_tx}, n); got {samples.shape}")
    n = samples.shape[1]
    out = np.zeros((ch.n_rx, n), dtype=np.complex128)
    if ch.taps_end is None:
        for r in range(ch.n_rx):
            for t in range(ch.n_tx):
                out[r] += np.convolve(samples[t], ch.taps[r, t])[:n]
        return out
    # Linear drift: per-sample tap value h(i) = h0 + (h1 - h0) * i / (n - 1).
    ramp = np.arange(n) / max(n - 1, 1)
    for r in range(ch.n_rx):
        for t in range(ch.n_tx):
            for m in range(ch.n_taps):
                h0 = ch.taps[r, t, m]
                dh = ch.taps_end[r, t, m] - h0
                shifted = np.zeros(n, dtype=np.complex128)
                shifted[m:] = samples[t, : n - m]
                out[r] += (h0 + dh * ramp) * shifted
    return out


def apply_mimo_channel(frame: TimeFrame, ch: ChannelRealization, noise_seed: int | None = None) -> TimeFrame:
    """Run a frame through the channel and add AWGN per the realization.

    The noise reference is the mean received sample power over the whole
    frame. Callers needing a different reference (e.g. per-payload-cell
    calibration) should propagate noiselessly and call `awgn` themselves.
    """
    clean = propagate(frame.samples, ch)
    if not (math.isinf(ch.noise_snr_db) and ch.noise_snr_db > 0):
        ref = float(np.mean(np.abs(clean) ** 2))
        seed = derive_seed("noise", ch.seed) if noise_seed is None else noise_seed
        clean = awgn(clean, ch.noise_snr_db, ref, seed)
    return TimeFrame(samples=clean, layout=frame.layout)


def frequency_response(ch: ChannelRealization, params: OfdmParams, end: bool = False) -> np.ndarray:
    """Exact per-used-subcarrier response, shape (used_subcarriers, n_rx, n_tx).

    H[k] = sum_m taps[..., m] * exp(-2j pi b_k m / fft_size) with b_k the FFT
    bin of used subcarrier k. With `end` the drift end taps are evaluated.
    """
    taps = ch.taps_end if end else ch.taps
    if taps is None:
        raise ValueError("channel has no drift end taps")
    bins = used_bin_indices(params)
    m = np.arange(ch.n_taps)
    phase = np.exp(-2j * np.pi * np.outer(bins, m) / params.fft_size)  # (used, taps)
    return np.einsum("km,rtm->krt", phase, taps)
