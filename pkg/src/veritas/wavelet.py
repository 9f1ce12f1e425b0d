"""Orthonormal 2-D Haar wavelet transform.

Each decomposition level rotates sample pairs into average/difference
coefficients scaled by 1/sqrt(2), along columns then rows of the active
top-left block, storing subbands in the usual in-place layout (approximation
in the top-left corner). The transform is orthonormal, so it preserves the
L2 norm exactly (Parseval), inverts exactly up to float rounding, and maps
gradients between coefficient and sample space by the forward transform
itself.

Inputs must be dyadic (every side a power of two); pad first if they are
not.
"""

from __future__ import annotations

import numpy as np

from .errors import NonDyadicDims, ShapeMismatch

__all__ = [
    "haar_forward",
    "haar_inverse",
    "detail_mask",
    "max_levels",
    "is_pow2",
    "pad_to_pow2",
]

_SQRT2 = np.sqrt(2.0)


def is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def max_levels(dims: tuple[int, int]) -> int:
    """Deepest decomposition the plane supports."""
    return int(min(dims)).bit_length() - 1


def _check_plane(plane: np.ndarray, levels: int) -> np.ndarray:
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D plane, got shape {plane.shape}")
    h, w = plane.shape
    if not (is_pow2(h) and is_pow2(w)):
        raise NonDyadicDims(f"plane dims must be powers of two, got {plane.shape}")
    if levels < 1 or levels > max_levels((h, w)):
        raise ValueError(f"levels must lie in [1, {max_levels((h, w))}] for shape {plane.shape}")
    return plane


def _fwd_cols(block: np.ndarray) -> np.ndarray:
    lo = (block[:, 0::2] + block[:, 1::2]) / _SQRT2
    hi = (block[:, 0::2] - block[:, 1::2]) / _SQRT2
    return np.hstack([lo, hi])


def _inv_cols(block: np.ndarray) -> np.ndarray:
    half = block.shape[1] // 2
    lo, hi = block[:, :half], block[:, half:]
    out = np.empty_like(block)
    out[:, 0::2] = (lo + hi) / _SQRT2
    out[:, 1::2] = (lo - hi) / _SQRT2
    return out


def haar_forward(plane: np.ndarray, levels: int) -> np.ndarray:
    """Decompose a dyadic plane, finest detail first."""
    plane = _check_plane(plane, levels)
    out = plane.copy()
    h, w = out.shape
    for _ in range(levels):
        block = out[:h, :w]
        block = _fwd_cols(block)
        block = _fwd_cols(block.T).T
        out[:h, :w] = block
        h //= 2
        w //= 2
    return out


def haar_inverse(coeffs: np.ndarray, levels: int) -> np.ndarray:
    """Reconstruct a plane from its decomposition."""
    coeffs = _check_plane(coeffs, levels)
    out = coeffs.copy()
    full_h, full_w = out.shape
    for level in reversed(range(levels)):
        h = full_h >> level
        w = full_w >> level
        block = out[:h, :w]
        block = _inv_cols(block.T).T
        block = _inv_cols(block)
        out[:h, :w] = block
    return out


def detail_mask(dims: tuple[int, int], levels: int) -> np.ndarray:
    """True on the detail subbands of the first ``levels`` decomposition
    levels; False on the remaining approximation block."""
    h, w = dims
    if not (is_pow2(h) and is_pow2(w)):
        raise NonDyadicDims(f"dims must be powers of two, got {dims}")
    if levels < 1 or levels > max_levels(dims):
        raise ValueError(f"levels must lie in [1, {max_levels(dims)}] for dims {dims}")
    mask = np.ones(dims, dtype=bool)
    mask[: h >> levels, : w >> levels] = False
    return mask


def pad_to_pow2(plane: np.ndarray) -> tuple[np.ndarray, tuple[int, int]]:
    """Mirror-pad bottom/right to the next powers of two.

    Returns the padded plane and the original dims for cropping back.
    """
    plane = np.asarray(plane, dtype=np.float64)
    if plane.ndim != 2:
        raise ShapeMismatch(f"expected a 2-D plane, got shape {plane.shape}")
    h, w = plane.shape
    target_h = 1 << max(0, (h - 1).bit_length())
    target_w = 1 << max(0, (w - 1).bit_length())
    if (target_h, target_w) == (h, w):
        return plane.copy(), (h, w)
    padded = np.pad(plane, ((0, target_h - h), (0, target_w - w)), mode="symmetric")
    return padded, (h, w)
