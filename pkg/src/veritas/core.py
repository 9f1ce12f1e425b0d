"""Pure patch/heatmap math underlying artifact scoring.

This module owns the deterministic geometry and arithmetic of the pipeline:
tiling an image into patches, resampling a saliency heatmap onto the
super-resolved image, summing heatmap mass per patch, and aggregating
per-patch votes into an artifact evidence score

    S = sum_k(w_k * v_k) / sum_k(w_k)

over the non-neutral patches, where ``w_k`` is the heatmap mass inside patch
``k`` and ``v_k`` encodes its vote (positive -> 1, negative -> 0). Neutral
patches mark the artifact as irrelevant to that region and are excluded from
both sums, so S stays a probability-like value in [0, 1].

Everything here is a pure function of its inputs; the dataclasses are frozen
and safe to share across workers.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import NoRelevantPatches, PatchOutOfBounds, ShapeMismatch, ZeroDimension
from .images import as_heatmap

__all__ = [
    "Patch",
    "PatchGrid",
    "PatchVote",
    "ArtifactScore",
    "VOTE_KINDS",
    "build_patch_grid",
    "interpolate_heatmap",
    "patch_weight",
    "with_patch_weights",
    "crop_patch",
    "classify_vote",
    "encode_vote",
    "artifact_score",
]

VOTE_KINDS = ("positive", "negative", "neutral")

# Ties between descriptor similarities resolve toward the most conservative
# claim: neutral beats negative beats positive.
_TIE_PRIORITY = ("neutral", "negative", "positive")


@dataclass(frozen=True)
class Patch:
    """One rectangle of a patch grid, in pixel units.

    ``weight`` is the heatmap mass assigned to the patch; grids are built
    with zero weights and weighted later via :func:`with_patch_weights`.
    """

    row_offset: int
    col_offset: int
    height: int
    width: int
    weight: float = 0.0

    def __post_init__(self):
        if self.row_offset < 0 or self.col_offset < 0 or self.height < 1 or self.width < 1:
            raise ValueError(f"degenerate patch rectangle: {self}")
        if self.weight < 0:
            raise ValueError("patch weight must be non-negative")


@dataclass(frozen=True)
class PatchGrid:
    """Non-overlapping exact tiling of an image by patches."""

    patches: tuple[Patch, ...]
    source_dims: tuple[int, int]


@dataclass(frozen=True)
class PatchVote:
    """A patch's three-way verdict for one artifact descriptor.

    ``similarities`` holds the cosine similarities to the (positive,
    negative, neutral) descriptions, in that order; ``kind`` must be their
    argmax under the tie rule.
    """

    kind: str
    similarities: tuple[float, float, float]

    def __post_init__(self):
        if self.kind not in VOTE_KINDS:
            raise ValueError(f"unknown vote kind {self.kind!r}")
        if self.kind != classify_vote(self.similarities):
            raise ValueError(
                f"vote kind {self.kind!r} contradicts similarities {self.similarities}"
            )


@dataclass(frozen=True)
class ArtifactScore:
    """Aggregate evidence for one artifact over an image."""

    artifact_name: str
    score: float
    counts: tuple[int, int, int]  # (n_positive, n_negative, n_neutral)
    retained: bool


def build_patch_grid(dims: tuple[int, int], patch_size: int) -> PatchGrid:
    """Tile an image of ``dims = (height, width)`` with square patches.

    Patches are ``patch_size`` on each side except at the bottom/right
    boundary, where the remainder produces smaller patches, so the tiling is
    exact: every pixel belongs to exactly one patch and the patch count is
    ``ceil(H / p) * ceil(W / p)``.
    """
    height, width = int(dims[0]), int(dims[1])
    if height <= 0 or width <= 0 or patch_size <= 0:
        raise ZeroDimension(
            f"dims and patch_size must be positive, got dims={dims}, patch_size={patch_size}"
        )
    patches = []
    for top in range(0, height, patch_size):
        for left in range(0, width, patch_size):
            patches.append(
                Patch(
                    row_offset=top,
                    col_offset=left,
                    height=min(patch_size, height - top),
                    width=min(patch_size, width - left),
                )
            )
    return PatchGrid(patches=tuple(patches), source_dims=(height, width))


def _resample_axis(values: np.ndarray, new_len: int, axis: int) -> np.ndarray:
    """Linear resampling along one axis with endpoints pinned to the corners.

    Sample positions are ``linspace(0, old_len - 1, new_len)``, so equal
    lengths return the input untouched and constant inputs stay exactly
    constant (the lerp form ``lo + (hi - lo) * frac`` has a zero difference
    term).
    """
    old_len = values.shape[axis]
    if new_len == old_len:
        return values
    positions = np.linspace(0.0, old_len - 1.0, num=new_len)
    lo = np.floor(positions).astype(np.intp)
    hi = np.minimum(lo + 1, old_len - 1)
    frac = positions - lo
    shape = [1] * values.ndim
    shape[axis] = new_len
    frac = frac.reshape(shape)
    v_lo = np.take(values, lo, axis=axis)
    v_hi = np.take(values, hi, axis=axis)
    return v_lo + (v_hi - v_lo) * frac


def interpolate_heatmap(h: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Bilinearly resample a heatmap to ``target_dims = (height, width)``.

    The output is clipped to the input's value range, making the bilinear
    convexity guarantee (no new extrema) hold exactly despite float
    rounding. Identical dims return an identical copy.
    """
    h = as_heatmap(h)
    th, tw = int(target_dims[0]), int(target_dims[1])
    if th <= 0 or tw <= 0:
        raise ZeroDimension(f"target dims must be positive, got {target_dims}")
    out = _resample_axis(h, th, axis=0)
    out = _resample_axis(out, tw, axis=1)
    return np.clip(out, h.min(), h.max())


def resample_bilinear(values: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Bilinear resampling for general 2-D/3-D arrays (no range clip)."""
    th, tw = int(target_dims[0]), int(target_dims[1])
    if th <= 0 or tw <= 0:
        raise ZeroDimension(f"target dims must be positive, got {target_dims}")
    out = _resample_axis(np.asarray(values, dtype=np.float64), th, axis=0)
    return _resample_axis(out, tw, axis=1)


def _check_patch_in_bounds(dims: tuple[int, int], p: Patch) -> None:
    h, w = dims
    if (
        p.row_offset < 0
        or p.col_offset < 0
        or p.height <= 0
        or p.width <= 0
        or p.row_offset + p.height > h
        or p.col_offset + p.width > w
    ):
        raise PatchOutOfBounds(f"patch {p} does not fit inside dims {dims}")


def patch_weight(h: np.ndarray, p: Patch) -> float:
    """Sum of heatmap intensities over the patch rectangle."""
    h = as_heatmap(h)
    _check_patch_in_bounds(h.shape, p)
    block = h[p.row_offset : p.row_offset + p.height, p.col_offset : p.col_offset + p.width]
    return float(block.sum())


def with_patch_weights(grid: PatchGrid, h: np.ndarray) -> PatchGrid:
    """Return a copy of ``grid`` with each patch's heatmap mass attached."""
    h = as_heatmap(h)
    if h.shape != grid.source_dims:
        raise ShapeMismatch(
            f"heatmap dims {h.shape} do not match grid source dims {grid.source_dims}"
        )
    weighted = tuple(replace(p, weight=patch_weight(h, p)) for p in grid.patches)
    return PatchGrid(patches=weighted, source_dims=grid.source_dims)


def crop_patch(arr: np.ndarray, p: Patch) -> np.ndarray:
    """Extract a patch rectangle from a 2-D or 3-D array."""
    arr = np.asarray(arr)
    _check_patch_in_bounds(arr.shape[:2], p)
    return arr[p.row_offset : p.row_offset + p.height, p.col_offset : p.col_offset + p.width]


def classify_vote(similarities: Sequence[float]) -> str:
    """Map (positive, negative, neutral) similarities to a vote kind.

    Argmax, with exact ties resolved by the fixed priority
    neutral > negative > positive.
    """
    pos, neg, neu = (float(s) for s in similarities)
    by_kind = {"positive": pos, "negative": neg, "neutral": neu}
    best = max(by_kind.values())
    for kind in _TIE_PRIORITY:
        if by_kind[kind] == best:
            return kind
    raise AssertionError("unreachable")


def encode_vote(v: PatchVote) -> float | None:
    """Numeric vote encoding: positive -> 1.0, negative -> 0.0, neutral -> None.

    ``None`` marks the patch as irrelevant; callers must drop it from both
    the numerator and denominator of the score.
    """
    if v.kind == "positive":
        return 1.0
    if v.kind == "negative":
        return 0.0
    return None


def artifact_score(
    weights: Iterable[float],
    votes: Iterable[PatchVote],
    threshold: float,
    artifact_name: str = "",
) -> ArtifactScore:
    """Aggregate weighted patch votes into an artifact evidence score.

    Raises :class:`NoRelevantPatches` when every vote is neutral or the
    non-neutral patches carry zero total weight; the artifact simply does
    not apply to this image.
    """
    weights = [float(w) for w in weights]
    votes = list(votes)
    if len(weights) != len(votes):
        raise ShapeMismatch(f"{len(weights)} weights vs {len(votes)} votes")
    if any(w < 0 for w in weights):
        raise ValueError("patch weights must be non-negative")

    counts = [0, 0, 0]
    numer = 0.0
    denom = 0.0
    for w, v in zip(weights, votes):
        counts[VOTE_KINDS.index(v.kind)] += 1
        encoded = encode_vote(v)
        if encoded is None:
            continue
        numer += w * encoded
        denom += w
    if denom == 0.0:
        raise NoRelevantPatches(
            f"artifact {artifact_name or '<unnamed>'}: all votes neutral or zero weight"
        )
    score = numer / denom
    return ArtifactScore(
        artifact_name=artifact_name,
        score=score,
        counts=(counts[0], counts[1], counts[2]),
        retained=score >= threshold,
    )
