"""Quality metrics: PSNR, quantizer SQNR, and per-subcarrier error spectra."""

from __future__ import annotations

import numpy as np

from .interleave import ShufflePlan
from .rxchain import RxReport
from .txchain import quantize_fixed_point

PSNR_CAP_DB = 80.0


def psnr(reference: np.ndarray, test: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE), capped at +80 dB for (near-)identical inputs."""
    reference = np.asarray(reference, dtype=np.float64)
    test = np.asarray(test, dtype=np.float64)
    if reference.shape != test.shape:
        raise ValueError(f"shape mismatch: {reference.shape} vs {test.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((reference - test) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(peak * peak / mse), PSNR_CAP_DB))


def psnr_tiled(reference_tiles: np.ndarray, test_tiles: np.ndarray, peak: float = 1.0) -> float:
    """PSNR of a tiled mosaic, scored over the concatenated pixel set.

    Equivalent to assembling the tiles into one large image first: the MSE is
    averaged over all pixels of all tiles, not over per-tile PSNRs.
    """
    reference_tiles = np.asarray(reference_tiles, dtype=np.float64)
    test_tiles = np.asarray(test_tiles, dtype=np.float64)
    if reference_tiles.shape != test_tiles.shape:
        raise ValueError("tile arrays differ in shape")
    return psnr(reference_tiles.ravel(), test_tiles.ravel(), peak=peak)


def measure_sqnr(symbols: np.ndarray, bits: int) -> float:
    """Signal-to-quantization-noise of the fixed-point symbol quantizer in dB.

    10 log10(sum |x|^2 / sum |x - q(x)|^2), capped at +80 dB (bits = 0 or an
    exactly representable input produce zero error).
    """
    symbols = np.asarray(symbols, dtype=np.complex128)
    sig = float(np.sum(np.abs(symbols) ** 2))
    if sig <= 0:
        raise ValueError("zero-power input; SQNR undefined")
    err = float(np.sum(np.abs(symbols - quantize_fixed_point(symbols, bits)) ** 2))
    if err == 0.0:
        return PSNR_CAP_DB
    return float(min(10.0 * np.log10(sig / err), PSNR_CAP_DB))


def error_spectrum(report: RxReport, plan: ShufflePlan) -> dict[str, np.ndarray]:
    """Mean payload error power per (stream, subcarrier), in two views.

    "physical": grouped by the cell each payload symbol actually occupied
    (shuffling applied). "original": grouped by the cell it would have
    occupied without shuffling, which is how a dispersion plot shows where
    errors would have landed. Rows with no payload symbols get NaN.

    Returns arrays of equal length: stream, subcarrier, mean_err_power_physical,
    mean_err_power_original, plus the per-view totals for consistency checks.
    """
    if report.per_position_err is None or report.gmap is None:
        raise ValueError("report lacks per-position errors")
    err = report.per_position_err
    n = len(err)
    params = report.gmap.params
    physical = report.physical_positions
    original = report.gmap.entries[:n]
    if plan.length != n:
        raise ValueError("plan length does not match payload length")

    shape = (params.n_streams, params.used_subcarriers)
    sums = {}
    counts = {}
    for view, pos in (("physical", physical), ("original", original)):
        acc = np.zeros(shape)
        cnt = np.zeros(shape, dtype=np.int64)
        np.add.at(acc, (pos[:, 0], pos[:, 2]), err)
        np.add.at(cnt, (pos[:, 0], pos[:, 2]), 1)
        sums[view] = acc
        counts[view] = cnt

    streams, subcarriers = np.meshgrid(
        np.arange(params.n_streams), np.arange(params.used_subcarriers), indexing="ij"
    )
    out: dict[str, np.ndarray] = {
        "stream": streams.ravel(),
        "subcarrier": subcarriers.ravel(),
    }
    for view in ("physical", "original"):
        with np.errstate(invalid="ignore"):
            mean = np.where(counts[view] > 0, sums[view] / np.maximum(counts[view], 1), np.nan)
        out[f"mean_err_power_{view}"] = mean.ravel()
        out[f"count_{view}"] = counts[view].ravel()
    return out
