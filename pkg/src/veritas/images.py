"""Image array conventions and IO.

An image is a float64 ``numpy`` array of shape ``(height, width, channels)``
with ``channels`` in ``{1, 3}`` and every intensity in ``[0, 1]``. A heatmap
is a non-negative float64 array of shape ``(height, width)``. All library
code validates at its boundaries with the helpers here and then trusts the
convention internally.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ShapeMismatch, ZeroDimension

__all__ = [
    "as_image",
    "as_model_input",
    "validate_image",
    "as_heatmap",
    "validate_heatmap",
    "load_image",
    "save_image",
]


def as_image(data) -> np.ndarray:
    """Coerce ``data`` to the canonical image layout and validate it.

    2-D input is treated as a single-channel image. The returned array is
    float64 and C-contiguous; input values must already lie in [0, 1].
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    validate_image(arr)
    return np.ascontiguousarray(arr)


def as_model_input(data) -> np.ndarray:
    """Image-shaped float array without the [0, 1] range check.

    Classifiers must accept these: evaluating attacks with the valid-range
    clamp disabled probes points outside the pixel box on purpose.
    """
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim == 2:
        arr = arr[:, :, np.newaxis]
    if arr.ndim != 3 or arr.shape[2] not in (1, 3):
        raise ShapeMismatch(f"expected an (H, W, C) array with C in {{1, 3}}, got {arr.shape}")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ZeroDimension(f"array has a zero dimension: {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("model input contains non-finite values")
    return np.ascontiguousarray(arr)


def validate_image(img: np.ndarray) -> None:
    if not isinstance(img, np.ndarray) or img.ndim != 3:
        raise ShapeMismatch(f"image must be an (H, W, C) array, got {getattr(img, 'shape', type(img))}")
    h, w, c = img.shape
    if h == 0 or w == 0:
        raise ZeroDimension(f"image has a zero dimension: {img.shape}")
    if c not in (1, 3):
        raise ShapeMismatch(f"image must have 1 or 3 channels, got {c}")
    if not np.all(np.isfinite(img)):
        raise ValueError("image contains non-finite intensities")
    if img.min() < 0.0 or img.max() > 1.0:
        raise ValueError(f"image intensities must lie in [0, 1], got [{img.min()}, {img.max()}]")


def as_heatmap(data) -> np.ndarray:
    arr = np.asarray(data, dtype=np.float64)
    validate_heatmap(arr)
    return np.ascontiguousarray(arr)


def validate_heatmap(h: np.ndarray) -> None:
    if not isinstance(h, np.ndarray) or h.ndim != 2:
        raise ShapeMismatch(f"heatmap must be an (H, W) array, got {getattr(h, 'shape', type(h))}")
    if h.shape[0] == 0 or h.shape[1] == 0:
        raise ZeroDimension(f"heatmap has a zero dimension: {h.shape}")
    if not np.all(np.isfinite(h)):
        raise ValueError("heatmap contains non-finite values")
    if h.min() < 0.0:
        raise ValueError("heatmap values must be non-negative")


def load_image(path: str | Path) -> np.ndarray:
    """Read an image file into the canonical [0, 1] float layout.

    Grayscale files come back single-channel; everything else is converted
    to RGB.
    """
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            im = im.convert("L")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        arr = np.asarray(im, dtype=np.float64) / 255.0
    return as_image(arr)


def save_image(img: np.ndarray, path: str | Path) -> None:
    img = as_image(img)
    data = np.round(img * 255.0).astype(np.uint8)
    if data.shape[2] == 1:
        pil = Image.fromarray(data[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(data, mode="RGB")
    pil.save(path)
