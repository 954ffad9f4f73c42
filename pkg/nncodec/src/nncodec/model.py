"""Convolutional symbol autoencoder.

The encoder maps a 32x32x3 image to 512 complex channel symbols (one symbol
per six pixels) through four conv stages with one self-attention block; the
decoder mirrors it. Encoder output is power-normalized per image, so a
symbol vector always has unit mean power and the channel SNR is defined
against a known reference. Symbols travel as an interleaved (I, Q) view of
the final feature map, matching the on-disk bridge layout.
"""

from __future__ import annotations

import math

import numpy as np
import torch
from torch import nn

IMAGE_PIXELS = 32 * 32 * 3
BANDWIDTH_RATIO = 1.0 / 6.0
SYMBOLS_PER_IMAGE = int(IMAGE_PIXELS * BANDWIDTH_RATIO)  # 512


class AttentionBlock(nn.Module):
    """Single-head self-attention over spatial positions, residual output."""

    def __init__(self, channels: int) -> None:
        super().__init__()
        self.query = nn.Conv2d(channels, channels, 1)
        self.key = nn.Conv2d(channels, channels, 1)
        self.value = nn.Conv2d(channels, channels, 1)
        self.proj = nn.Conv2d(channels, channels, 1)
        self.scale = 1.0 / math.sqrt(channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        b, c, h, w = x.shape
        q = self.query(x).flatten(2)
        k = self.key(x).flatten(2)
        v = self.value(x).flatten(2)
        attn = torch.softmax(q.transpose(1, 2) @ k * self.scale, dim=-1)
        out = (v @ attn.transpose(1, 2)).view(b, c, h, w)
        return x + self.proj(out)


class SymbolCodec(nn.Module):
    """Encoder/decoder pair operating on (batch, 3, 32, 32) tensors."""

    def __init__(self) -> None:
        super().__init__()
        self.encoder = nn.Sequential(
            nn.Conv2d(3, 32, 3, stride=2, padding=1),  # 16x16
            nn.PReLU(32),
            nn.Conv2d(32, 64, 3, stride=2, padding=1),  # 8x8
            nn.PReLU(64),
            AttentionBlock(64),
            nn.Conv2d(64, 128, 3, stride=2, padding=1),  # 4x4
            nn.PReLU(128),
            nn.Conv2d(128, 64, 3, stride=1, padding=1),  # 4x4x64 = 1024 reals
        )
        self.decoder = nn.Sequential(
            nn.Conv2d(64, 128, 3, padding=1),
            nn.PReLU(128),
            nn.ConvTranspose2d(128, 64, 4, stride=2, padding=1),  # 8x8
            nn.PReLU(64),
            AttentionBlock(64),
            nn.ConvTranspose2d(64, 32, 4, stride=2, padding=1),  # 16x16
            nn.PReLU(32),
            nn.ConvTranspose2d(32, 3, 4, stride=2, padding=1),  # 32x32
        )

    def encode(self, images: torch.Tensor) -> torch.Tensor:
        """Images to unit-mean-power complex symbols, shape (batch, 512)."""
        if images.ndim != 4 or images.shape[1:] != (3, 32, 32):
            raise ValueError("expected (batch, 3, 32, 32) images")
        flat = self.encoder(images).flatten(1)
        sym = torch.complex(flat[:, 0::2], flat[:, 1::2])
        power = (sym.real**2 + sym.imag**2).mean(dim=1, keepdim=True)
        return sym / torch.sqrt(power + 1e-12)

    def decode(self, symbols: torch.Tensor) -> torch.Tensor:
        """Symbols back to images in [0, 1], shape (batch, 3, 32, 32)."""
        if symbols.ndim != 2 or symbols.shape[1] != SYMBOLS_PER_IMAGE:
            raise ValueError(f"expected (batch, {SYMBOLS_PER_IMAGE}) symbols")
        flat = torch.empty(
            symbols.shape[0], 2 * SYMBOLS_PER_IMAGE, dtype=torch.float32, device=symbols.device
        )
        flat[:, 0::2] = symbols.real.float()
        flat[:, 1::2] = symbols.imag.float()
        feats = flat.view(-1, 64, 4, 4)
        return torch.sigmoid(self.decoder(feats))

    def forward(
        self, images: torch.Tensor, snr_db: float, generator: torch.Generator
    ) -> tuple[torch.Tensor, torch.Tensor]:
        """Full differentiable pass: encode, AWGN at snr_db, decode."""
        sym = self.encode(images)
        noisy = awgn(sym, snr_db, generator)
        return self.decode(noisy), sym


def awgn(symbols: torch.Tensor, snr_db: float, generator: torch.Generator) -> torch.Tensor:
    """Complex white noise against the unit-power symbol reference."""
    sigma = math.sqrt(10.0 ** (-snr_db / 10.0) / 2.0)
    shape = symbols.shape
    noise_re = torch.randn(shape, generator=generator) * sigma
    noise_im = torch.randn(shape, generator=generator) * sigma
    return symbols + torch.complex(noise_re, noise_im)


def build_model(seed: int) -> SymbolCodec:
    """Seeded construction so two builds share their initial weights."""
    torch.manual_seed(seed)
    return SymbolCodec()


def images_to_tensor(images: np.ndarray) -> torch.Tensor:
    """(n, 32, 32, 3) float array in [0, 1] to a (n, 3, 32, 32) tensor."""
    images = np.asarray(images, dtype=np.float32)
    if images.ndim != 4 or images.shape[1:] != (32, 32, 3):
        raise ValueError(f"expected (n, 32, 32, 3) images, got {images.shape}")
    return torch.from_numpy(images).permute(0, 3, 1, 2).contiguous()


def tensor_to_images(batch: torch.Tensor) -> np.ndarray:
    """Inverse of images_to_tensor."""
    return batch.detach().permute(0, 2, 3, 1).contiguous().numpy()
