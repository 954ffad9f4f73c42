"""Image datasets: a folder of 32x32 RGB images, or arrays on disk.

Images are handled as float32 arrays of shape (n, 32, 32, 3) in [0, 1].
Any folder of 32x32 PNG/JPEG files works (CIFAR-10 exported to disk, for
example); .npy/.npz files holding an (n, 32, 32, 3) array load directly.
A seeded synthetic generator is included so tests and demos need no
external dataset.
"""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

IMAGE_SHAPE = (32, 32, 3)
_EXTENSIONS = (".png", ".jpg", ".jpeg")


def load_images(path: str) -> np.ndarray:
    """Load a dataset from a folder of images or a .npy/.npz file."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"dataset not found: {path}")
    if os.path.isdir(path):
        names = sorted(
            name for name in os.listdir(path) if name.lower().endswith(_EXTENSIONS)
        )
        if not names:
            raise FileNotFoundError(f"no image files in {path}")
        out = np.empty((len(names),) + IMAGE_SHAPE, dtype=np.float32)
        for i, name in enumerate(names):
            img = Image.open(os.path.join(path, name)).convert("RGB")
            if img.size != IMAGE_SHAPE[:2]:
                raise ValueError(f"{name}: expected 32x32, got {img.size[0]}x{img.size[1]}")
            out[i] = np.asarray(img, dtype=np.float32) / 255.0
        return out
    if path.endswith(".npz"):
        with np.load(path) as archive:
            arr = archive[archive.files[0]]
    else:
        arr = np.load(path)
    arr = np.asarray(arr, dtype=np.float32)
    if arr.ndim != 4 or arr.shape[1:] != IMAGE_SHAPE:
        raise ValueError(f"expected (n, 32, 32, 3) array, got {arr.shape}")
    if arr.max() > 1.5:  # stored as 0..255
        arr = arr / 255.0
    return np.clip(arr, 0.0, 1.0)


def synthetic_images(seed: int, n: int, smoothing_passes: int = 3) -> np.ndarray:
    """Seeded smooth random images in [0.02, 0.98], shape (n, 32, 32, 3).

    Uniform noise pushed through a few 3x3 box-filter passes (wrap-around),
    then stretched per image. Smooth enough that a small autoencoder has
    structure to learn, varied enough that reconstructions are measurable.
    """
    if n <= 0:
        raise ValueError("n must be positive")
    rng = np.random.Generator(np.random.Philox(key=seed))
    imgs = rng.uniform(size=(n,) + IMAGE_SHAPE).astype(np.float64)
    for _ in range(smoothing_passes):
        acc = np.zeros_like(imgs)
        for dy in (-1, 0, 1):
            for dx in (-1, 0, 1):
                acc += np.roll(np.roll(imgs, dy, axis=1), dx, axis=2)
        imgs = acc / 9.0
    lo = imgs.min(axis=(1, 2, 3), keepdims=True)
    hi = imgs.max(axis=(1, 2, 3), keepdims=True)
    span = np.where(hi - lo > 0, hi - lo, 1.0)
    return (0.02 + 0.96 * (imgs - lo) / span).astype(np.float32)


def write_image_folder(images: np.ndarray, path: str) -> None:
    """Write an (n, 32, 32, 3) array as numbered PNG files."""
    os.makedirs(path, exist_ok=True)
    for i, img in enumerate(images):
        byte = np.clip(np.round(img * 255.0), 0, 255).astype(np.uint8)
        Image.fromarray(byte).save(os.path.join(path, f"img{i:05d}.png"))


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB over the whole pair of arrays."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)
