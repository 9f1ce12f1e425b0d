"""Metric-learning loss evaluators over embedding vectors.

Pure numeric functions, no training loop: pairwise contrastive loss,
triplet loss, their weighted combination, and a temperature-scaled
supervised contrastive loss over a labeled batch. Each loss ships with its
analytic gradient so finite-difference checks can pin the math down.

The pairwise contrastive loss follows its usual asymmetric form literally:
the similar term is a squared distance while the dissimilar term squares a
hinge on the (unsquared) distance,

    mean_i [ y_i * d_i^2 + (1 - y_i) * max(0, m - d_i)^2 ].

The supervised contrastive loss row-normalizes the feature matrix, scales
the similarity matrix by 1/tau, removes self-similarity from the positive
mask only (the log-softmax denominator keeps every column), and averages
the negated log-probabilities over all positive pairs. Anchors without any
same-label partner contribute nothing to either sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from .errors import DimMismatch, EmptyPairList, EmptyTripletList, NoPositivePairs

__all__ = [
    "LossConfig",
    "LabeledEmbeddingBatch",
    "contrastive_pair_loss",
    "contrastive_pair_gradients",
    "triplet_loss",
    "triplet_gradients",
    "combined_loss",
    "supervised_contrastive_loss",
    "supervised_contrastive_gradient",
    "supervised_contrastive_parts",
]


@dataclass(frozen=True)
class LossConfig:
    """Weighting and shape parameters for the metric-learning losses.

    The 0.5/0.5 default split between the contrastive and triplet terms is
    arbitrary; tuning it is out of scope here.
    """

    alpha: float = 0.5
    beta: float = 0.5
    margin: float = 1.0
    temperature: float = 0.5

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("loss weights must be >= 0")
        if self.margin < 0:
            raise ValueError("margin must be >= 0")
        if self.temperature <= 0:
            raise ValueError("temperature must be > 0")


@dataclass(frozen=True)
class LabeledEmbeddingBatch:
    embeddings: np.ndarray  # (N, d)
    labels: np.ndarray  # (N,)

    def __post_init__(self):
        emb = np.asarray(self.embeddings, dtype=np.float64)
        labels = np.asarray(self.labels)
        if emb.ndim != 2 or emb.shape[0] < 2:
            raise ValueError("batch needs an (N, d) embedding matrix with N >= 2")
        if labels.shape != (emb.shape[0],):
            raise DimMismatch(f"{labels.shape} labels vs {emb.shape[0]} embeddings")
        object.__setattr__(self, "embeddings", emb)
        object.__setattr__(self, "labels", labels)


def _pair_arrays(pairs: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(pairs) == 0:
        raise EmptyPairList("contrastive loss needs at least one pair")
    a = np.asarray([p[0] for p in pairs], dtype=np.float64)
    b = np.asarray([p[1] for p in pairs], dtype=np.float64)
    y = np.asarray([p[2] for p in pairs], dtype=np.float64)
    if a.shape != b.shape or a.ndim != 2:
        raise DimMismatch("pair embeddings must share one (N, d) shape")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("pair labels must be 0 (dissimilar) or 1 (similar)")
    return a, b, y


def contrastive_pair_loss(pairs: Sequence, margin: float) -> float:
    """Mean pairwise contrastive loss over (anchor, other, label) pairs."""
    a, b, y = _pair_arrays(pairs)
    d = np.linalg.norm(a - b, axis=1)
    hinge = np.maximum(0.0, margin - d)
    return float(np.mean(y * d**2 + (1.0 - y) * hinge**2))


def contrastive_pair_gradients(pairs: Sequence, margin: float) -> tuple[np.ndarray, np.ndarray]:
    """Analytic d(loss)/d(a_i) and d(loss)/d(b_i), each (N, d).

    At d = 0 the dissimilar hinge is not differentiable; the zero
    subgradient is used there.
    """
    a, b, y = _pair_arrays(pairs)
    n = a.shape[0]
    diff = a - b
    d = np.linalg.norm(diff, axis=1)
    hinge = np.maximum(0.0, margin - d)
    grad_a = 2.0 * y[:, None] * diff
    safe_d = np.where(d > 0, d, 1.0)
    dissimilar = -2.0 * (1.0 - y) * hinge / safe_d
    dissimilar = np.where(d > 0, dissimilar, 0.0)
    grad_a += dissimilar[:, None] * diff
    grad_a /= n
    return grad_a, -grad_a


def _triplet_arrays(triplets: Sequence) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    if len(triplets) == 0:
        raise EmptyTripletList("triplet loss needs at least one triplet")
    a = np.asarray([t[0] for t in triplets], dtype=np.float64)
    p = np.asarray([t[1] for t in triplets], dtype=np.float64)
    n = np.asarray([t[2] for t in triplets], dtype=np.float64)
    if not (a.shape == p.shape == n.shape) or a.ndim != 2:
        raise DimMismatch("triplet embeddings must share one (N, d) shape")
    return a, p, n


def triplet_loss(triplets: Sequence, margin: float) -> float:
    """Mean hinge on squared anchor-positive vs anchor-negative distances."""
    a, p, n = _triplet_arrays(triplets)
    d_ap = np.sum((a - p) ** 2, axis=1)
    d_an = np.sum((a - n) ** 2, axis=1)
    return float(np.mean(np.maximum(0.0, d_ap - d_an + margin)))


def triplet_gradients(triplets: Sequence, margin: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients w.r.t. anchors, positives, negatives, each (N, d)."""
    a, p, n = _triplet_arrays(triplets)
    count = a.shape[0]
    d_ap = np.sum((a - p) ** 2, axis=1)
    d_an = np.sum((a - n) ** 2, axis=1)
    active = (d_ap - d_an + margin > 0).astype(np.float64)[:, None]
    grad_a = active * 2.0 * (n - p) / count
    grad_p = active * -2.0 * (a - p) / count
    grad_n = active * 2.0 * (a - n) / count
    return grad_a, grad_p, grad_n


def combined_loss(contrastive: float, triplet: float, config: LossConfig) -> float:
    """Weighted sum alpha * contrastive + beta * triplet."""
    return config.alpha * float(contrastive) + config.beta * float(triplet)


def _supcon_setup(batch: LabeledEmbeddingBatch, tau: float):
    if tau <= 0:
        raise ValueError("temperature must be > 0")
    feats = batch.embeddings
    norms = np.linalg.norm(feats, axis=1)
    if np.any(norms == 0):
        raise ValueError("cannot row-normalize zero embeddings")
    normalized = feats / norms[:, None]
    sims = normalized @ normalized.T / tau
    labels = batch.labels
    same = labels[:, None] == labels[None, :]
    pos_mask = same.astype(np.float64) - np.eye(labels.shape[0])
    neg_mask = (~same).astype(np.float64)
    total_pos = pos_mask.sum()
    if total_pos == 0:
        raise NoPositivePairs("no anchor has a same-label partner")
    return normalized, norms, sims, pos_mask, neg_mask, total_pos


def supervised_contrastive_loss(batch: LabeledEmbeddingBatch, tau: float) -> float:
    _, _, sims, pos_mask, _, total_pos = _supcon_setup(batch, tau)
    log_prob = sims - logsumexp(sims, axis=1, keepdims=True)
    return float(-(pos_mask * log_prob).sum() / total_pos)


def supervised_contrastive_gradient(batch: LabeledEmbeddingBatch, tau: float) -> np.ndarray:
    """Analytic d(loss)/d(embeddings), shape (N, d)."""
    normalized, norms, sims, pos_mask, _, total_pos = _supcon_setup(batch, tau)
    probs = softmax(sims, axis=1)
    # d(loss)/d(sims): direct positive-mask term plus the shared log-sum-exp.
    grad_s = (-pos_mask + pos_mask.sum(axis=1, keepdims=True) * probs) / total_pos
    grad_normalized = (grad_s + grad_s.T) @ normalized / tau
    inner = np.sum(grad_normalized * normalized, axis=1, keepdims=True)
    return (grad_normalized - inner * normalized) / norms[:, None]


def supervised_contrastive_parts(batch: LabeledEmbeddingBatch, tau: float) -> dict:
    """Debug view of every intermediate, including the unused negative mask."""
    normalized, _, sims, pos_mask, neg_mask, total_pos = _supcon_setup(batch, tau)
    log_prob = sims - logsumexp(sims, axis=1, keepdims=True)
    return {
        "normalized": normalized,
        "similarities": sims,
        "positive_mask": pos_mask,
        "negative_mask": neg_mask,
        "log_prob": log_prob,
        "loss": float(-(pos_mask * log_prob).sum() / total_pos),
    }
