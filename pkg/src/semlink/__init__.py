"""Deterministic MIMO-OFDM baseband link simulator for analog codec symbols."""

from .channel import (
    ChannelProfile,
    ChannelRealization,
    PaParams,
    awgn,
    derive_seed,
    draw_channel,
    exp_pdp_profile,
    frequency_response,
    identity_channel,
    pa_rapp,
    propagate,
)
from .codec import (
    BridgeFormatError,
    CodecDescriptor,
    LinearCodec,
    QamCodec,
    bridge_export,
    bridge_import,
    constant_envelope_reference,
    gaussian_source,
    synthetic_images,
)
from .grid import (
    GridMap,
    OfdmParams,
    PilotSequence,
    ResourceGrid,
    build_grid_map,
    demap_symbols,
    make_pilot_sequence,
    map_symbols,
)
from .interleave import ShufflePlan, deshuffle, identity_plan, make_plan, shuffle
from .link import LinkConfig, LinkResult, perfect_estimate, run_link
from .metrics import error_spectrum, measure_sqnr, psnr, psnr_tiled
from .rxchain import (
    ChannelEstimate,
    RxReport,
    SyncError,
    compute_evm,
    estimate_channel,
    estimate_noise_power,
    ofdm_demodulate,
    synchronize,
    zf_combine,
    zf_noise_enhancement,
)
from .txchain import (
    PaprStats,
    TimeFrame,
    TxConfig,
    build_frame,
    make_preamble,
    measure_papr,
    normalize_clip,
    ofdm_modulate,
    quantize_fixed_point,
    tx_reference,
    zadoff_chu,
)

__version__ = "0.1.0"

__all__ = [
    "BridgeFormatError",
    "ChannelEstimate",
    "ChannelProfile",
    "ChannelRealization",
    "CodecDescriptor",
    "GridMap",
    "LinearCodec",
    "LinkConfig",
    "LinkResult",
    "OfdmParams",
    "PaParams",
    "PaprStats",
    "PilotSequence",
    "QamCodec",
    "ResourceGrid",
    "RxReport",
    "ShufflePlan",
    "SyncError",
    "TimeFrame",
    "TxConfig",
    "awgn",
    "bridge_export",
    "bridge_import",
    "build_frame",
    "build_grid_map",
    "compute_evm",
    "constant_envelope_reference",
    "demap_symbols",
    "derive_seed",
    "deshuffle",
    "draw_channel",
    "error_spectrum",
    "estimate_channel",
    "estimate_noise_power",
    "exp_pdp_profile",
    "frequency_response",
    "gaussian_source",
    "identity_channel",
    "identity_plan",
    "make_pilot_sequence",
    "make_plan",
    "make_preamble",
    "map_symbols",
    "measure_papr",
    "measure_sqnr",
    "normalize_clip",
    "ofdm_demodulate",
    "ofdm_modulate",
    "pa_rapp",
    "perfect_estimate",
    "propagate",
    "psnr",
    "psnr_tiled",
    "quantize_fixed_point",
    "run_link",
    "shuffle",
    "synchronize",
    "synthetic_images",
    "tx_reference",
    "zadoff_chu",
    "zf_combine",
    "zf_noise_enhancement",
    "__version__",
]
