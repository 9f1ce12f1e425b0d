"""Backend interfaces isolating every model-dependent pipeline stage.

Four backend kinds exist:

* :class:`Classifier` — binary real/fake prediction with optional input
  gradients and saliency tensors (activations plus activation gradients at a
  designated feature layer).
* :class:`Embedder` — joint image/text embeddings, unit-normalized.
* :class:`SuperResolver` — integer-factor upscaling.
* :class:`Vlm` — prompted text generation about an image.

Handles are single-consumer unless documented otherwise; the deterministic
mocks in :mod:`veritas.backends.mock` are safe to share.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from ..errors import DimMismatch, GradientsUnsupported

__all__ = [
    "CLASS_LABELS",
    "label_index",
    "Embedding",
    "ClassifierOutput",
    "BackendDescriptor",
    "Classifier",
    "Embedder",
    "SuperResolver",
    "Vlm",
    "normalize_embedding",
    "cosine_similarity",
]

# Logit order everywhere: index 0 = real, index 1 = fake.
CLASS_LABELS = ("real", "fake")


def label_index(label: str | int) -> int:
    if isinstance(label, str):
        try:
            return CLASS_LABELS.index(label)
        except ValueError:
            raise ValueError(f"unknown class label {label!r}; expected one of {CLASS_LABELS}")
    idx = int(label)
    if idx not in (0, 1):
        raise ValueError(f"class index must be 0 or 1, got {idx}")
    return idx


@dataclass(frozen=True)
class Embedding:
    """A fixed-length embedding vector; unit-norm after normalization."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64).reshape(-1))

    @property
    def dim(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class ClassifierOutput:
    """Logits over (real, fake), the argmax prediction, and optional feature
    maps from the saliency layer."""

    logits: np.ndarray
    prediction: str
    activations: np.ndarray | None = None

    @property
    def fake_probability(self) -> float:
        """Softmax probability of the fake class, computed stably."""
        z = self.logits - self.logits.max()
        e = np.exp(z)
        return float(e[1] / e.sum())


@dataclass(frozen=True)
class BackendDescriptor:
    kind: str  # classifier | embedder | super_resolver | vlm
    name: str
    deterministic: bool


class Classifier(abc.ABC):
    """Binary real/fake classifier over canonical images."""

    descriptor: BackendDescriptor

    @abc.abstractmethod
    def classify(self, img: np.ndarray, with_activations: bool = False) -> ClassifierOutput:
        """Run the model on one image."""

    def input_gradient(self, img: np.ndarray, label: str | int) -> np.ndarray:
        """Gradient of the cross-entropy loss at ``label`` w.r.t. the image."""
        raise GradientsUnsupported(f"{self.descriptor.name} cannot provide input gradients")

    def saliency_tensors(self, img: np.ndarray, target_class: str | int):
        """Feature-layer activations and target-score gradients, both (K, h, w)."""
        raise GradientsUnsupported(f"{self.descriptor.name} cannot provide saliency tensors")


class Embedder(abc.ABC):
    descriptor: BackendDescriptor

    @abc.abstractmethod
    def embed_image(self, img: np.ndarray) -> Embedding: ...

    @abc.abstractmethod
    def embed_text(self, text: str) -> Embedding: ...


class SuperResolver(abc.ABC):
    descriptor: BackendDescriptor

    @abc.abstractmethod
    def super_resolve(self, img: np.ndarray, factor: int) -> np.ndarray:
        """Upscale by an integer factor in {2, 4}; output stays in [0, 1]."""


class Vlm(abc.ABC):
    descriptor: BackendDescriptor

    @abc.abstractmethod
    def generate(self, prompt: str, img: np.ndarray) -> str:
        """Produce raw text for a prompt about an image."""


def normalize_embedding(values: np.ndarray) -> Embedding:
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    norm = float(np.linalg.norm(values))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero embedding")
    return Embedding(values / norm)


def cosine_similarity(a: Embedding, b: Embedding) -> float:
    """Cosine of the angle between two embeddings, clipped into [-1, 1]."""
    if a.dim != b.dim:
        raise DimMismatch(f"embedding dims differ: {a.dim} vs {b.dim}")
    na = float(np.linalg.norm(a.values))
    nb = float(np.linalg.norm(b.values))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    sim = float(np.dot(a.values, b.values) / (na * nb))
    return min(1.0, max(-1.0, sim))
