"""Adapters wrapping real pre-trained models behind the backend interfaces.

Everything here degrades to :class:`~veritas.errors.BackendUnavailable` when
torch (or the weights on disk) are missing; nothing silently substitutes a
mock. Models are consumed as-is; no training happens in this package.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ..errors import BackendUnavailable, GradientsUnsupported, ShapeMismatch, UnsupportedFactor
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
    "TorchClassifier",
    "TorchSuperResolver",
    "ClipEmbedder",
    "HfVlm",
    "load_torch_module",
]


def _require_torch():
    try:
        import torch  # noqa: F401
        import torch.nn.functional  # noqa: F401
    except ImportError as exc:
        raise BackendUnavailable(f"torch is not installed: {exc}")
    return torch


def load_torch_module(path: str | Path):
    """Load a pickled eager ``nn.Module`` saved with ``torch.save(model)``."""
    torch = _require_torch()
    path = Path(path)
    if not path.exists():
        raise BackendUnavailable(f"model weights not found at {path}")
    try:
        module = torch.load(path, map_location="cpu", weights_only=False)
    except Exception as exc:
        raise BackendUnavailable(f"failed to load torch module from {path}: {exc}")
    if not isinstance(module, torch.nn.Module):
        raise BackendUnavailable(f"{path} did not contain an nn.Module (got {type(module)})")
    module.eval()
    return module


def _module_dtype(torch, module):
    for param in module.parameters():
        return param.dtype
    return torch.float32


def _to_tensor(img: np.ndarray, dtype=None):
    torch = _require_torch()
    img = as_model_input(img)
    tensor = torch.from_numpy(np.transpose(img, (2, 0, 1))[np.newaxis])
    return tensor.to(dtype if dtype is not None else torch.float32)


class TorchClassifier(Classifier):
    """Wrap any eager torch module that maps (1, C, H, W) to (1, 2) logits.

    The saliency layer defaults to the last ``Conv2d`` in module order,
    matching the usual "final convolutional layer" choice for class
    activation mapping; pass ``saliency_layer`` to override by name.
    """

    def __init__(self, module, name: str = "torch-classifier", saliency_layer: str | None = None):
        torch = _require_torch()
        self.torch = torch
        self.module = module.eval()
        self._dtype = _module_dtype(torch, self.module)
        self._layer = self._resolve_layer(saliency_layer)
        self.descriptor = BackendDescriptor(kind="classifier", name=name, deterministic=True)

    def _resolve_layer(self, name: str | None):
        torch = self.torch
        if name is not None:
            layers = dict(self.module.named_modules())
            if name not in layers:
                raise ShapeMismatch(f"no submodule named {name!r}")
            return layers[name]
        last_conv = None
        for _, mod in self.module.named_modules():
            if isinstance(mod, torch.nn.Conv2d):
                last_conv = mod
        return last_conv

    def _logits(self, x):
        out = self.module(x)
        if out.ndim != 2 or out.shape[1] != 2:
            raise ShapeMismatch(f"classifier must emit (1, 2) logits, got {tuple(out.shape)}")
        return out

    def classify(self, img: np.ndarray, with_activations: bool = False) -> ClassifierOutput:
        torch = self.torch
        activations = None
        if with_activations:
            acts, _, logits = self._forward_with_saliency(img, target_class=1)
            activations = acts
        else:
            with torch.no_grad():
                logits = self._logits(_to_tensor(img, self._dtype))
        logits_np = logits.detach().numpy()[0].astype(np.float64)
        return ClassifierOutput(
            logits=logits_np,
            prediction=CLASS_LABELS[int(np.argmax(logits_np))],
            activations=activations,
        )

    def input_gradient(self, img: np.ndarray, label: str | int) -> np.ndarray:
        torch = self.torch
        x = _to_tensor(img, self._dtype).requires_grad_(True)
        logits = self._logits(x)
        target = torch.tensor([label_index(label)])
        loss = torch.nn.functional.cross_entropy(logits, target)
        (grad,) = torch.autograd.grad(loss, x)
        return np.transpose(grad.numpy()[0].astype(np.float64), (1, 2, 0))

    def _forward_with_saliency(self, img: np.ndarray, target_class: str | int):
        torch = self.torch
        if self._layer is None:
            raise GradientsUnsupported(
                f"{self.descriptor.name} has no convolutional layer to read saliency from"
            )
        captured = {}

        def hook(_mod, _inp, out):
            captured["acts"] = out

        handle = self._layer.register_forward_hook(hook)
        try:
            x = _to_tensor(img, self._dtype)
            logits = self._logits(x)
        finally:
            handle.remove()
        acts = captured["acts"]
        score = logits[0, label_index(target_class)]
        (grads,) = torch.autograd.grad(score, acts, retain_graph=False)
        acts_np = acts.detach().numpy()[0].astype(np.float64)
        grads_np = grads.numpy()[0].astype(np.float64)
        return acts_np, grads_np, logits

    def saliency_tensors(self, img: np.ndarray, target_class: str | int):
        acts, grads, _ = self._forward_with_saliency(img, target_class)
        return acts, grads


class TorchSuperResolver(SuperResolver):
    """Learned super-resolution modules, one per upscale factor."""

    def __init__(self, modules_by_factor: dict[int, object], name: str = "torch-sr"):
        _require_torch()
        self.modules_by_factor = dict(modules_by_factor)
        self.descriptor = BackendDescriptor(kind="super_resolver", name=name, deterministic=True)

    def super_resolve(self, img: np.ndarray, factor: int) -> np.ndarray:
        torch = _require_torch()
        if factor not in (2, 4):
            raise UnsupportedFactor(f"factor must be 2 or 4, got {factor}")
        module = self.modules_by_factor.get(factor)
        if module is None:
            raise BackendUnavailable(
                f"{self.descriptor.name} has no weights for x{factor} upscaling"
            )
        img = as_image(img)
        with torch.no_grad():
            out = module(_to_tensor(img, _module_dtype(torch, module)))
        out_np = np.transpose(out.numpy()[0].astype(np.float64), (1, 2, 0))
        expected = (img.shape[0] * factor, img.shape[1] * factor, img.shape[2])
        if out_np.shape != expected:
            raise ShapeMismatch(f"super-resolver produced {out_np.shape}, expected {expected}")
        return np.clip(out_np, 0.0, 1.0)


class ClipEmbedder(Embedder):
    """CLIP-style joint embedder loaded from a local checkpoint directory."""

    def __init__(self, checkpoint_dir: str | Path, name: str = "clip"):
        try:
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise BackendUnavailable(f"transformers is not installed: {exc}")
        checkpoint_dir = Path(checkpoint_dir)
        if not checkpoint_dir.is_dir():
            raise BackendUnavailable(f"no CLIP checkpoint directory at {checkpoint_dir}")
        try:
            self.model = CLIPModel.from_pretrained(checkpoint_dir, local_files_only=True)
            self.processor = CLIPProcessor.from_pretrained(checkpoint_dir, local_files_only=True)
        except Exception as exc:
            raise BackendUnavailable(f"failed to load CLIP from {checkpoint_dir}: {exc}")
        self.model.eval()
        self.descriptor = BackendDescriptor(kind="embedder", name=name, deterministic=True)

    def embed_image(self, img: np.ndarray) -> Embedding:
        torch = _require_torch()
        img = as_image(img)
        if img.shape[2] == 1:
            img = np.repeat(img, 3, axis=2)
        pixel = (img * 255.0).astype(np.uint8)
        inputs = self.processor(images=pixel, return_tensors="pt")
        with torch.no_grad():
            feats = self.model.get_image_features(**inputs)
        return normalize_embedding(feats.numpy()[0].astype(np.float64))

    def embed_text(self, text: str) -> Embedding:
        torch = _require_torch()
        if not text:
            raise ValueError("cannot embed empty text")
        inputs = self.processor(text=[text], return_tensors="pt", padding=True)
        with torch.no_grad():
            feats = self.model.get_text_features(**inputs)
        return normalize_embedding(feats.numpy()[0].astype(np.float64))


class HfVlm(Vlm):
    """Vision-language generation via a local transformers checkpoint."""

    def __init__(self, checkpoint_dir: str | Path, name: str = "hf-vlm", max_new_tokens: int = 120):
        try:
            from transformers import AutoModelForCausalLM, AutoProcessor
        except ImportError as exc:
            raise BackendUnavailable(f"transformers is not installed: {exc}")
        checkpoint_dir = Path(checkpoint_dir)
        if not checkpoint_dir.is_dir():
            raise BackendUnavailable(f"no VLM checkpoint directory at {checkpoint_dir}")
        try:
            self.processor = AutoProcessor.from_pretrained(
                checkpoint_dir, local_files_only=True, trust_remote_code=True
            )
            self.model = AutoModelForCausalLM.from_pretrained(
                checkpoint_dir, local_files_only=True, trust_remote_code=True
            )
        except Exception as exc:
            raise BackendUnavailable(f"failed to load VLM from {checkpoint_dir}: {exc}")
        self.max_new_tokens = max_new_tokens
        self.descriptor = BackendDescriptor(kind="vlm", name=name, deterministic=False)

    def generate(self, prompt: str, img: np.ndarray) -> str:
        torch = _require_torch()
        if not prompt:
            raise ValueError("prompt must be non-empty")
        img = as_image(img)
        if img.shape[2] == 1:
            img = np.repeat(img, 3, axis=2)
        pixel = (img * 255.0).astype(np.uint8)
        inputs = self.processor(images=pixel, text=prompt, return_tensors="pt")
        with torch.no_grad():
            output = self.model.generate(**inputs, max_new_tokens=self.max_new_tokens)
        return self.processor.batch_decode(output, skip_special_tokens=True)[0]
