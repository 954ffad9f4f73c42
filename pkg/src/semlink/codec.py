"""Symbol codecs, reference sources, and the symbol-bridge file format.

The linear codec is the deterministic stand-in for a learned analog image
codec: a seeded orthonormal projection of the mean-centered image to 512
complex symbols. An optional design operating point makes the decoder behave
like a model calibrated for one noise level (see `LinearCodec`). The QAM
codec is a classical hard-decision baseline, and `gaussian_source` provides
the high-PAPR proxy for learned symbol statistics.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

IMAGE_SHAPE = (32, 32, 3)
IMAGE_SIZE = 32 * 32 * 3  # 3072 real pixels
SYMBOLS_PER_IMAGE = 512

_BRIDGE_MAGIC = b"SMSY"
_BRIDGE_VERSION = 1
_BRIDGE_HEADER = struct.Struct("<4sHQH")  # magic, version, count, reserved


class BridgeFormatError(ValueError):
    """Raised for malformed symbol-bridge files."""


@dataclass(frozen=True)
class CodecDescriptor:
    """What a codec consumes and produces."""

    name: str
    symbols_per_source: int
    source_shape: tuple[int, int, int]

    @property
    def bandwidth_ratio(self) -> float:
        """Complex symbols per real source sample."""
        return self.symbols_per_source / (
            self.source_shape[0] * self.source_shape[1] * self.source_shape[2]
        )


def _check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image, dtype=np.float64)
    if image.shape != IMAGE_SHAPE:
        raise ValueError(f"image must have shape {IMAGE_SHAPE}, got {image.shape}")
    if image.min() < 0.0 or image.max() > 1.0:
        raise ValueError("pixel values must lie in [0, 1]")
    return image


class LinearCodec:
    """Seeded orthonormal projection codec: 3072 pixels -> 512 complex symbols.

    encode: y = A (x - 0.5) with A a 512x3072 complex matrix, A A^H = I.
    decode: x_hat = clip(Re(A^H y) + 0.5, 0, 1), the minimum-norm linear
    reconstruction.

    With `design_snr_db` set and per-symbol noise estimates supplied to
    decode, the decoder behaves like a model calibrated for one homogeneous
    noise level: a block whose average reported noise is an outlier against
    the rest of the batch (beyond OUTLIER_MARGIN times the batch median, and
    above the design-point level) is reconstructed through a basis rotated
    off the real axis by an angle that grows with the excess, up to a
    quarter turn. The rotation keeps the noise power but trades recoverable
    content for the projection's quadrature image, so reconstruction quality
    cliffs for blocks outside the regime the decoder was fitted in instead
    of degrading gracefully, the way a learned decoder mistakes
    out-of-distribution inputs for content. Without noise estimates, or
    at/below the design point, decoding is exactly the plain linear
    reconstruction. The outlier test is relative to the batch, so a single
    block (or a uniformly noisy batch, however bad) always decodes plainly.
    """

    OUTLIER_MARGIN = 1.1

    def __init__(
        self,
        seed: int,
        design_snr_db: float | None = None,
        sensitivity: float = 16.0,
    ) -> None:
        self.seed = seed
        self.design_snr_db = design_snr_db
        self.sensitivity = float(sensitivity)
        self.mean = 0.5
        rng = np.random.Generator(np.random.Philox(key=seed))
        g = rng.standard_normal((IMAGE_SIZE, SYMBOLS_PER_IMAGE)) + 1j * rng.standard_normal(
            (IMAGE_SIZE, SYMBOLS_PER_IMAGE)
        )
        q, _ = np.linalg.qr(g)  # (3072, 512), orthonormal columns
        self.matrix = q.conj().T  # (512, 3072), orthonormal rows

    @property
    def descriptor(self) -> CodecDescriptor:
        return CodecDescriptor(
            name="linear", symbols_per_source=SYMBOLS_PER_IMAGE, source_shape=IMAGE_SHAPE
        )

    def with_design_point(self, design_snr_db: float | None) -> "LinearCodec":
        """Copy of this codec pinned to a different operating point."""
        other = LinearCodec.__new__(LinearCodec)
        other.__dict__.update(self.__dict__)
        other.design_snr_db = design_snr_db
        return other

    def encode(self, image: np.ndarray) -> np.ndarray:
        image = _check_image(image)
        return self.matrix @ (image.ravel() - self.mean)

    def encode_batch(self, images: np.ndarray) -> np.ndarray:
        """Encode (n, 32, 32, 3) images to n * 512 symbols, image-major."""
        images = np.asarray(images, dtype=np.float64)
        if images.ndim != 4 or images.shape[1:] != IMAGE_SHAPE:
            raise ValueError(f"images must be (n, 32, 32, 3), got {images.shape}")
        flat = images.reshape(len(images), IMAGE_SIZE) - self.mean
        return (flat @ self.matrix.T).ravel()

    def _block_angles(self, blocks: np.ndarray, noise_est: np.ndarray | None) -> np.ndarray:
        """Per-block basis rotation in [0, pi/2]; 0 means plain decoding.

        noise_est holds one noise-variance estimate per received symbol, in
        the same units as the symbols themselves (a receiver derives it from
        its channel estimate; see the link layer). The angle leaves 0 only
        for blocks whose mean noise stands out against both the batch median
        and the design-point level, and grows with the excess relative to
        the batch's signal power at `sensitivity` rate.
        """
        n_blocks = blocks.shape[0]
        if self.design_snr_db is None or noise_est is None:
            return np.zeros(n_blocks)
        noise_est = np.asarray(noise_est, dtype=np.float64).ravel()
        if noise_est.size != blocks.size:
            raise ValueError("noise_est must provide one value per symbol")
        block_noise = noise_est.reshape(n_blocks, -1).mean(axis=1)
        block_power = np.mean(np.abs(blocks) ** 2, axis=1)
        signal_power = float(np.median(block_power)) - float(np.median(block_noise))
        signal_power = max(signal_power, 1e-12)
        design_noise = signal_power / 10.0 ** (self.design_snr_db / 10.0)
        threshold = max(self.OUTLIER_MARGIN * float(np.median(block_noise)), design_noise)
        excess = np.maximum(block_noise - threshold, 0.0)
        return np.minimum(self.sensitivity * excess / signal_power, np.pi / 2.0)

    def decode(self, symbols: np.ndarray, noise_est: np.ndarray | None = None) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=np.complex128).ravel()
        if symbols.size != SYMBOLS_PER_IMAGE:
            raise ValueError(f"expected {SYMBOLS_PER_IMAGE} symbols, got {symbols.size}")
        return self.decode_batch(symbols, noise_est)[0]

    def decode_batch(
        self, symbols: np.ndarray, noise_est: np.ndarray | None = None
    ) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=np.complex128).ravel()
        if symbols.size % SYMBOLS_PER_IMAGE != 0:
            raise ValueError("symbol count is not a whole number of image blocks")
        blocks = symbols.reshape(-1, SYMBOLS_PER_IMAGE)
        theta = self._block_angles(blocks, noise_est)
        recon = blocks @ self.matrix.conj()  # complex (n, 3072)
        pixels = np.cos(theta)[:, None] * recon.real - np.sin(theta)[:, None] * recon.imag
        return np.clip(pixels + self.mean, 0.0, 1.0).reshape(-1, *IMAGE_SHAPE)


def _gray_to_binary(g: np.ndarray) -> np.ndarray:
    b = g.copy()
    shift = g >> 1
    while np.any(shift):
        b ^= shift
        shift >>= 1
    return b


class QamCodec:
    """Gray-mapped square QAM over 8-bit pixel words, unit mean symbol power.

    Bits split evenly between I and Q (I bits first); each axis is Gray-coded
    with the all-zeros word on the most positive level, so 4-QAM maps bits 00
    to (1 + 1j) / sqrt(2). Used as a classical PAPR/EVM baseline, without any
    channel coding.
    """

    ORDERS = (4, 16, 64, 256)

    def __init__(self, order: int) -> None:
        if order not in self.ORDERS:
            raise ValueError(f"order must be one of {self.ORDERS}")
        self.order = order
        self.bits_per_symbol = int(math.log2(order))
        self.side = int(math.isqrt(order))
        # Mean constellation power of side^2 points at odd levels is 2(order-1)/3.
        self.scale = math.sqrt(2.0 * (order - 1) / 3.0)

    @property
    def descriptor(self) -> CodecDescriptor:
        return CodecDescriptor(
            name=f"qam{self.order}",
            symbols_per_source=IMAGE_SIZE * 8 // self.bits_per_symbol,
            source_shape=IMAGE_SHAPE,
        )

    def _axis_levels(self, bits: np.ndarray) -> np.ndarray:
        """Half-word bits (n, bits/2) -> normalized amplitude per axis."""
        weights = 1 << np.arange(bits.shape[1] - 1, -1, -1)
        gray = (bits * weights).sum(axis=1)
        idx = _gray_to_binary(gray)
        return (self.side - 1 - 2 * idx) / self.scale

    def _axis_bits(self, levels: np.ndarray) -> np.ndarray:
        idx = np.round((self.side - 1 - levels * self.scale) / 2.0).astype(np.int64)
        idx = np.clip(idx, 0, self.side - 1)
        gray = idx ^ (idx >> 1)
        n_bits = self.bits_per_symbol // 2
        out = np.zeros((len(levels), n_bits), dtype=np.uint8)
        for i in range(n_bits):
            out[:, i] = (gray >> (n_bits - 1 - i)) & 1
        return out

    def bits_to_symbols(self, bits: np.ndarray) -> np.ndarray:
        bits = np.asarray(bits, dtype=np.uint8).ravel()
        if bits.size == 0 or bits.size % self.bits_per_symbol != 0:
            raise ValueError(f"bit count must be a positive multiple of {self.bits_per_symbol}")
        if np.any(bits > 1):
            raise ValueError("bits must be 0 or 1")
        words = bits.reshape(-1, self.bits_per_symbol)
        half = self.bits_per_symbol // 2
        return self._axis_levels(words[:, :half]) + 1j * self._axis_levels(words[:, half:])

    def symbols_to_bits(self, symbols: np.ndarray) -> np.ndarray:
        symbols = np.asarray(symbols, dtype=np.complex128).ravel()
        i_bits = self._axis_bits(symbols.real)
        q_bits = self._axis_bits(symbols.imag)
        return np.concatenate([i_bits, q_bits], axis=1).ravel()

    def encode(self, image: np.ndarray) -> np.ndarray:
        image = _check_image(image)
        words = np.round(image.ravel() * 255.0).astype(np.uint8)
        bits = np.unpackbits(words)
        return self.bits_to_symbols(bits)

    def decode(self, symbols: np.ndarray) -> np.ndarray:
        bits = self.symbols_to_bits(symbols)
        expected = IMAGE_SIZE * 8
        if bits.size != expected:
            raise ValueError(f"expected {expected // self.bits_per_symbol} symbols for one image")
        words = np.packbits(bits.astype(np.uint8))
        return (words.astype(np.float64) / 255.0).reshape(IMAGE_SHAPE)


def gaussian_source(seed: int, n: int) -> np.ndarray:
    """Unit-variance circularly-symmetric complex Gaussian symbols."""
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed))
    return (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / math.sqrt(2.0)


def constant_envelope_reference(n: int, period: int = 72, root: int = 7) -> np.ndarray:
    """Low-PAPR unit-power reference: a Frank-Zadoff-Chu chirp per grid row.

    exp(-j pi u k^2 / L) is constant-amplitude and stays near-constant in the
    time domain when mapped across `period` subcarriers, so it bounds the
    waveform PAPR scale from below (a few dB on the default grid versus ~8.5
    for 16-QAM).
    """
    if n <= 0:
        raise ValueError("n must be positive")
    if math.gcd(root, period) != 1:
        raise ValueError("root must be coprime with period")
    k = np.arange(n) % period
    return np.exp(-1j * np.pi * root * k * k / period)


def synthetic_images(seed: int, n: int, smoothing_passes: int = 3) -> np.ndarray:
    """Deterministic natural-ish test images: smoothed noise, range-stretched.

    Returns (n, 32, 32, 3) float64 in [0, 1]. Smoothing is a circular 3x3 box
    filter, applied `smoothing_passes` times, followed by a per-image stretch
    to [0.02, 0.98] so every image has usable contrast.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed))
    imgs = rng.random((n, *IMAGE_SHAPE))
    for _ in range(smoothing_passes):
        acc = np.zeros_like(imgs)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                acc += np.roll(np.roll(imgs, dy, axis=1), dx, axis=2)
        imgs = acc / 9.0
    lo = imgs.min(axis=(1, 2, 3), keepdims=True)
    hi = imgs.max(axis=(1, 2, 3), keepdims=True)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    return 0.02 + 0.96 * (imgs - lo) / span


def bridge_export(symbols: np.ndarray, path: str) -> None:
    """Write symbols to the binary bridge format.

    Layout: magic "SMSY", version u16, count u64, reserved u16 (all little
    endian), then count interleaved (I, Q) float32 pairs. Values are stored
    as float32; feed float32-representable symbols for bit-exact round trips.
    """
    symbols = np.asarray(symbols, dtype=np.complex128).ravel()
    body = np.empty(2 * symbols.size, dtype="<f4")
    body[0::2] = symbols.real.astype("<f4")
    body[1::2] = symbols.imag.astype("<f4")
    with open(path, "wb") as fh:
        fh.write(_BRIDGE_HEADER.pack(_BRIDGE_MAGIC, _BRIDGE_VERSION, symbols.size, 0))
        fh.write(body.tobytes())


def bridge_import(path: str) -> np.ndarray:
    """Read a bridge file back to complex128 symbols (exact float32 values)."""
    with open(path, "rb") as fh:
        header = fh.read(_BRIDGE_HEADER.size)
        if len(header) < _BRIDGE_HEADER.size:
            raise BridgeFormatError("file too short for a bridge header")
        magic, version, count, _reserved = _BRIDGE_HEADER.unpack(header)
        if magic != _BRIDGE_MAGIC:
            raise BridgeFormatError(f"bad magic {magic!r}")
        if version != _BRIDGE_VERSION:
            raise BridgeFormatError(f"unsupported bridge version {version}")
        body = fh.read()
    expected = 8 * count
    if len(body) != expected:
        raise BridgeFormatError(f"body holds {len(body)} bytes, header promised {expected}")
    flat = np.frombuffer(body, dtype="<f4").astype(np.float64)
    return flat[0::2] + 1j * flat[1::2]
