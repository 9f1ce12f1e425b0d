"""Gradient-weighted class activation heatmaps.

Given a classifier that exposes feature-layer activations ``A_k`` and the
gradients of the target class score w.r.t. them, the heatmap is

    cam = ReLU( sum_k alpha_k * A_k ),   alpha_k = spatial mean of dscore/dA_k

computed at the feature layer's resolution and bilinearly upsampled to the
input image. ReLU keeps only positively contributing regions, so outputs
are non-negative by construction. The map is computed on the classifier's
native low-resolution input, never on an upscaled version of it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .core import resample_bilinear
from .errors import ShapeMismatch
from .images import as_heatmap, as_image, save_image

__all__ = ["gradcam", "normalize_heatmap", "save_heatmap_overlay"]


def gradcam(classifier, img: np.ndarray, target_class: str | int = "fake") -> np.ndarray:
    """Class activation heatmap for ``img`` at the image's resolution.

    The default target is the fake class: artifact explanation asks where
    the model sees synthetic evidence. Pass the predicted class instead for
    pure-classification visualization.
    """
    img = as_image(img)
    activations, grads = classifier.saliency_tensors(img, target_class)
    activations = np.asarray(activations, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if activations.shape != grads.shape or activations.ndim != 3:
        raise ShapeMismatch(
            f"activations {activations.shape} and gradients {grads.shape} must both be (K, h, w)"
        )
    channel_weights = grads.mean(axis=(1, 2))
    cam = np.tensordot(channel_weights, activations, axes=1)
    cam = np.maximum(cam, 0.0)
    if cam.shape != img.shape[:2]:
        cam = np.maximum(resample_bilinear(cam, img.shape[:2]), 0.0)
    return cam


def normalize_heatmap(h: np.ndarray) -> np.ndarray:
    """Scale a heatmap so its max is 1; an all-zero map passes through."""
    h = as_heatmap(h)
    peak = h.max()
    if peak == 0.0:
        return h.copy()
    return h / peak


# Color anchors for the overlay ramp (low -> high saliency).
_RAMP = np.array(
    [
        [0.05, 0.03, 0.35],
        [0.15, 0.30, 0.85],
        [0.10, 0.75, 0.55],
        [0.95, 0.85, 0.15],
        [0.90, 0.15, 0.10],
    ]
)


def _colorize(values: np.ndarray) -> np.ndarray:
    stops = np.linspace(0.0, 1.0, _RAMP.shape[0])
    channels = [np.interp(values, stops, _RAMP[:, c]) for c in range(3)]
    return np.stack(channels, axis=-1)


def save_heatmap_overlay(
    img: np.ndarray, heatmap: np.ndarray, path: str | Path, alpha: float = 0.45
) -> None:
    """Write the image with an alpha-blended saliency colormap as a PNG."""
    img = as_image(img)
    heatmap = as_heatmap(heatmap)
    if heatmap.shape != img.shape[:2]:
        raise ShapeMismatch(f"heatmap {heatmap.shape} does not match image {img.shape[:2]}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    base = img if img.shape[2] == 3 else np.repeat(img, 3, axis=2)
    colored = _colorize(normalize_heatmap(heatmap))
    blended = np.clip((1.0 - alpha) * base + alpha * colored, 0.0, 1.0)
    save_image(blended, path)
