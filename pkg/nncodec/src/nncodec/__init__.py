"""Toy neural image codec producing low-PAPR channel symbols."""

from .bridge import BridgeFormatError, read_symbols, write_symbols
from .data import load_images, psnr, synthetic_images, write_image_folder
from .model import (
    BANDWIDTH_RATIO,
    SYMBOLS_PER_IMAGE,
    AttentionBlock,
    SymbolCodec,
    awgn,
    build_model,
    images_to_tensor,
    tensor_to_images,
)
from .train import (
    TrainConfig,
    encode_images,
    evaluate_psnr,
    export_symbols,
    import_and_decode,
    load_checkpoint,
    save_checkpoint,
    train,
)
from .waveform import (
    FFT_SIZE,
    TONES_PER_BODY,
    USED_BINS,
    measure_papr_p95,
    papr_loss,
    waveform_numpy,
    waveform_torch,
)

__version__ = "0.1.0"

__all__ = [
    "BANDWIDTH_RATIO",
    "BridgeFormatError",
    "FFT_SIZE",
    "SYMBOLS_PER_IMAGE",
    "TONES_PER_BODY",
    "USED_BINS",
    "AttentionBlock",
    "SymbolCodec",
    "TrainConfig",
    "awgn",
    "build_model",
    "encode_images",
    "evaluate_psnr",
    "export_symbols",
    "images_to_tensor",
    "import_and_decode",
    "load_checkpoint",
    "load_images",
    "measure_papr_p95",
    "papr_loss",
    "psnr",
    "read_symbols",
    "save_checkpoint",
    "synthetic_images",
    "tensor_to_images",
    "train",
    "waveform_numpy",
    "waveform_torch",
    "write_image_folder",
    "write_symbols",
]
