"""Shared low-level image operations on channel-first numpy arrays."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
import torch.nn.functional as F
from PIL import Image
from scipy import ndimage


def resize_image(image: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of a (C, h, w) float32 image to (C, *size)."""
    t = torch.from_numpy(np.ascontiguousarray(image, dtype=np.float32)).unsqueeze(0)
    out = F.interpolate(t, size=size, mode="bilinear", align_corners=False)
    return out.squeeze(0).numpy()


def resize_mask(mask: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Nearest-neighbor resize of a (1, h, w) bool mask; stays strictly binary."""
    t = torch.from_numpy(mask.astype(np.float32)).unsqueeze(0)
    out = F.interpolate(t, size=size, mode="nearest")
    return out.squeeze(0).numpy() > 0.5


def gaussian_kernel1d(sigma: float) -> np.ndarray:
    """Normalized 1D Gaussian truncated at 4 sigma; width-1 identity as sigma -> 0."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    radius = int(4.0 * sigma + 0.5)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(image: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur with reflective borders, per channel."""
    k = gaussian_kernel1d(sigma)
    out = image.astype(np.float64)
    out = ndimage.convolve1d(out, k, axis=-2, mode="reflect")
    out = ndimage.convolve1d(out, k, axis=-1, mode="reflect")
    return out.astype(np.float32)


def load_image(path: str | Path) -> np.ndarray:
    """Read an RGB image as (3, h, w) float32 in [0, 1]."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("RGB"), dtype=np.float32) / 255.0
    except (OSError, ValueError) as e:
        raise ValueError(f"cannot decode image {path}: {e}") from e
    return np.ascontiguousarray(arr.transpose(2, 0, 1))


def save_image(path: str | Path, image: np.ndarray) -> None:
    """Write a (3, h, w) float image in [0, 1] or a (h, w) uint8 array as PNG."""
    if image.dtype == np.uint8:
        Image.fromarray(image).save(path)
        return
    arr = np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
    Image.fromarray(arr.transpose(1, 2, 0)).save(path)


def decode_mask(path: str | Path) -> np.ndarray:
    """Read a mask image as (1, h, w) bool; pixel > 127 of 255 means manipulated."""
    try:
        with Image.open(path) as im:
            arr = np.asarray(im.convert("L"))
    except (OSError, ValueError) as e:
        raise ValueError(f"cannot decode mask {path}: {e}") from e
    return (arr > 127)[None]


def save_mask(path: str | Path, mask: np.ndarray) -> None:
    """Write a (1, h, w) bool mask as an 8-bit 0/255 PNG."""
    arr = np.where(np.asarray(mask)[0], 255, 0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)
