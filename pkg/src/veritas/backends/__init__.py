"""Model backends: interfaces, deterministic mocks, and real-model adapters."""

from .base import (
    CLASS_LABELS,
    BackendDescriptor,
    Classifier,
    ClassifierOutput,
    Embedder,
    Embedding,
    SuperResolver,
    Vlm,
    cosine_similarity,
    label_index,
    normalize_embedding,
)
from .mock import (
    BicubicSuperResolver,
    MockEmbedder,
    MockLinearClassifier,
    ScriptedVlm,
)
from .registry import BackendBundle, create_backends

__all__ = [
    "CLASS_LABELS",
    "BackendDescriptor",
    "Classifier",
    "ClassifierOutput",
    "Embedder",
    "Embedding",
    "SuperResolver",
    "Vlm",
    "cosine_similarity",
    "label_index",
    "normalize_embedding",
    "MockLinearClassifier",
    "MockEmbedder",
    "BicubicSuperResolver",
    "ScriptedVlm",
    "BackendBundle",
    "create_backends",
]
