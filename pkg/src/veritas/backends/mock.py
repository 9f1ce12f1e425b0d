"""Deterministic, analytically tractable backend mocks.

These stand-ins make every pipeline stage exactly verifiable offline:

* :class:`MockLinearClassifier` — a logistic model whose score is a single
  inner product, so cross-entropy gradients have a closed form and its
  "feature layer" is the identity over input channels.
* :class:`MockEmbedder` — maps keyword-bearing texts to fixed basis vectors
  and images to a basis vector chosen by mean intensity, so descriptor
  voting outcomes are fully controllable in tests.
* :class:`BicubicSuperResolver` — separable Keys-kernel upscaling; a clearly
  labeled non-learned fallback for the learned super-resolver slot.
* :class:`ScriptedVlm` — returns a configured response sequence, or derives
  a schema-valid answer from the prompt's artifact line.

All mocks are bit-reproducible given the same construction arguments and
inputs.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from ..errors import ShapeMismatch, UnsupportedFactor
from ..images import as_image, as_model_input
from .base import (
    CLASS_LABELS,
    BackendDescriptor,
    Classifier,
    ClassifierOutput,
    Embedder,
    Embedding,
    SuperResolver,
    Vlm,
    label_index,
    normalize_embedding,
)

__all__ = [
    "MockLinearClassifier",
    "MockEmbedder",
    "BicubicSuperResolver",
    "ScriptedVlm",
]


class MockLinearClassifier(Classifier):
    """Logistic real/fake classifier with score ``z = <weights, img> + bias``.

    Logits are ``[-z, +z]`` so the fake probability is ``sigmoid(2z)``. The
    designated saliency layer is the identity over input channels: activation
    map ``k`` is channel ``k`` of the image and the fake score's gradient
    w.r.t. it is the weight plane for that channel.
    """

    def __init__(self, weights: np.ndarray, bias: float = 0.0, name: str = "mock-linear"):
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.ndim == 2:
            self.weights = self.weights[:, :, np.newaxis]
        if self.weights.ndim != 3 or self.weights.shape[2] not in (1, 3):
            raise ShapeMismatch(f"weights must be (H, W, C) with C in {{1, 3}}, got {self.weights.shape}")
        self.bias = float(bias)
        self.descriptor = BackendDescriptor(kind="classifier", name=name, deterministic=True)

    @classmethod
    def from_seed(cls, seed: int, dims: tuple[int, int, int] = (32, 32, 3), scale: float = 0.05):
        rng = np.random.default_rng(seed)
        return cls(rng.normal(0.0, scale, size=dims), bias=float(rng.normal(0.0, scale)))

    @property
    def input_dims(self) -> tuple[int, int, int]:
        return self.weights.shape

    def _score(self, img: np.ndarray) -> float:
        img = as_model_input(img)
        if img.shape != self.weights.shape:
            raise ShapeMismatch(f"expected image of shape {self.weights.shape}, got {img.shape}")
        return float(np.sum(self.weights * img) + self.bias)

    def classify(self, img: np.ndarray, with_activations: bool = False) -> ClassifierOutput:
        z = self._score(img)
        logits = np.array([-z, z])
        activations = None
        if with_activations:
            activations = np.transpose(as_model_input(img), (2, 0, 1))
        return ClassifierOutput(
            logits=logits,
            prediction=CLASS_LABELS[int(np.argmax(logits))],
            activations=activations,
        )

    def loss(self, img: np.ndarray, label: str | int) -> float:
        """Cross-entropy of the model on one labeled image."""
        z = self._score(img)
        logits = np.array([-z, z])
        return float(logsumexp(logits) - logits[label_index(label)])

    def input_gradient(self, img: np.ndarray, label: str | int) -> np.ndarray:
        # dJ/dz for logits [-z, z]: 2*p_fake when label is real, -2*p_real
        # when label is fake (softmax probabilities at the current z).
        z = self._score(img)
        p_fake = 1.0 / (1.0 + np.exp(-2.0 * z))
        if label_index(label) == 0:
            djdz = 2.0 * p_fake
        else:
            djdz = -2.0 * (1.0 - p_fake)
        return djdz * self.weights

    def saliency_tensors(self, img: np.ndarray, target_class: str | int):
        img = as_model_input(img)
        if img.shape != self.weights.shape:
            raise ShapeMismatch(f"expected image of shape {self.weights.shape}, got {img.shape}")
        activations = np.transpose(img, (2, 0, 1))
        grads = np.transpose(self.weights, (2, 0, 1))
        if label_index(target_class) == 0:
            grads = -grads
        return activations, grads.copy()


def _hashed_unit_vector(text: str, dim: int) -> np.ndarray:
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    rng = np.random.default_rng(int.from_bytes(digest[:8], "big"))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


class MockEmbedder(Embedder):
    """Keyword-triggered basis-vector embedder.

    Texts containing a configured keyword map to that keyword's basis axis
    (first match in sorted keyword order wins, case-insensitive); other
    texts get a deterministic hash-seeded unit vector. Images map to the
    basis axis ``min(floor(mean * dim), dim - 1)`` of their mean intensity,
    so tests can steer a patch onto any axis by constructing its pixels.
    """

    def __init__(self, dim: int = 16, keyword_axes: Mapping[str, int] | None = None,
                 name: str = "mock-embedder"):
        if dim < 2:
            raise ValueError("embedding dim must be at least 2")
        self.dim = int(dim)
        if keyword_axes is None:
            keyword_axes = {"animal": 0, "vehicle": 1}
        self.keyword_axes = {str(k).lower(): int(v) for k, v in keyword_axes.items()}
        for axis in self.keyword_axes.values():
            if not 0 <= axis < self.dim:
                raise ValueError(f"keyword axis {axis} outside embedding dim {self.dim}")
        self.descriptor = BackendDescriptor(kind="embedder", name=name, deterministic=True)

    def _basis(self, axis: int) -> Embedding:
        vec = np.zeros(self.dim)
        vec[axis] = 1.0
        return Embedding(vec)

    def embed_text(self, text: str) -> Embedding:
        if not text:
            raise ValueError("cannot embed empty text")
        lowered = text.lower()
        for keyword in sorted(self.keyword_axes):
            if keyword in lowered:
                return self._basis(self.keyword_axes[keyword])
        return normalize_embedding(_hashed_unit_vector(lowered, self.dim))

    def embed_image(self, img: np.ndarray) -> Embedding:
        img = as_image(img)
        axis = min(int(float(img.mean()) * self.dim), self.dim - 1)
        return self._basis(axis)

    def axis_for_mean(self, mean: float) -> int:
        """The basis axis an image of the given mean intensity lands on."""
        return min(int(float(mean) * self.dim), self.dim - 1)


def _keys_kernel(t: np.ndarray, a: float = -0.5) -> np.ndarray:
    """Keys bicubic convolution kernel (a = -0.5, Catmull-Rom)."""
    t = np.abs(t)
    out = np.zeros_like(t)
    near = t <= 1.0
    mid = (t > 1.0) & (t < 2.0)
    out[near] = (a + 2.0) * t[near] ** 3 - (a + 3.0) * t[near] ** 2 + 1.0
    out[mid] = a * t[mid] ** 3 - 5.0 * a * t[mid] ** 2 + 8.0 * a * t[mid] - 4.0 * a
    return out


def _bicubic_axis(values: np.ndarray, new_len: int, axis: int) -> np.ndarray:
    old_len = values.shape[axis]
    if new_len == old_len:
        return values
    if old_len == 1:
        reps = [1] * values.ndim
        reps[axis] = new_len
        return np.tile(values, reps)
    positions = np.linspace(0.0, old_len - 1.0, num=new_len)
    base = np.floor(positions).astype(np.intp)
    frac = positions - base
    out_shape = list(values.shape)
    out_shape[axis] = new_len
    out = np.zeros(out_shape)
    shape = [1] * values.ndim
    shape[axis] = new_len
    for tap in (-1, 0, 1, 2):
        idx = np.clip(base + tap, 0, old_len - 1)
        w = _keys_kernel(frac - tap).reshape(shape)
        out = out + w * np.take(values, idx, axis=axis)
    return out


class BicubicSuperResolver(SuperResolver):
    """Separable Keys-kernel bicubic upscaler.

    A deterministic interpolation fallback, not a learned reconstruction
    model; its descriptor says so. Outputs are clamped back into [0, 1]
    because the kernel's negative lobes can overshoot.
    """

    SUPPORTED_FACTORS = (2, 4)

    def __init__(self, name: str = "bicubic-fallback"):
        self.descriptor = BackendDescriptor(kind="super_resolver", name=name, deterministic=True)

    def super_resolve(self, img: np.ndarray, factor: int) -> np.ndarray:
        if factor not in self.SUPPORTED_FACTORS:
            raise UnsupportedFactor(f"factor must be one of {self.SUPPORTED_FACTORS}, got {factor}")
        img = as_image(img)
        h, w, _ = img.shape
        out = _bicubic_axis(img, h * factor, axis=0)
        out = _bicubic_axis(out, w * factor, axis=1)
        return np.clip(out, 0.0, 1.0)


_ARTIFACT_LINE = re.compile(r"^Artifact:\s*(\S+)\s*$", re.MULTILINE)


class ScriptedVlm(Vlm):
    """VLM mock: replays a response script, or answers from the prompt.

    With a script, calls consume responses in order and the last entry
    repeats once exhausted (handy for malformed-then-valid retry tests).
    Without one, the mock reads the prompt's ``Artifact:`` line and returns
    a schema-valid JSON object for that artifact, so full-pipeline runs are
    deterministic. Call bookkeeping is thread-safe.
    """

    def __init__(self, script: Sequence[str] | None = None, name: str = "scripted-vlm"):
        self.script = list(script) if script is not None else None
        self.calls = 0
        self._lock = threading.Lock()
        self.descriptor = BackendDescriptor(kind="vlm", name=name, deterministic=True)

    def generate(self, prompt: str, img: np.ndarray) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        with self._lock:
            call_index = self.calls
            self.calls += 1
        if self.script is not None:
            if not self.script:
                raise ValueError("scripted VLM has an empty script")
            return self.script[min(call_index, len(self.script) - 1)]
        match = _ARTIFACT_LINE.search(prompt)
        name = match.group(1) if match else "unknown_artifact"
        description = (
            f"A clearly seen instance of {name.replace('_', ' ')} appears near the "
            f"most heavily weighted patch of the image."
        )
        return json.dumps({"artifact": name, "description": description})
