"""Backend construction by name.

The bundle groups one backend per kind. ``mock`` names resolve to the
deterministic in-process mocks; ``real`` names resolve to adapters that load
pre-trained weights from a model directory (argument, else the
``VERITAS_MODEL_DIR`` environment variable) and raise
:class:`~veritas.errors.BackendUnavailable` when anything is missing.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from ..errors import BackendUnavailable
from .base import Classifier, Embedder, SuperResolver, Vlm
from .mock import BicubicSuperResolver, MockEmbedder, MockLinearClassifier, ScriptedVlm

__all__ = ["BackendBundle", "create_backends", "MODEL_DIR_ENV"]

MODEL_DIR_ENV = "VERITAS_MODEL_DIR"

KINDS = ("classifier", "embedder", "super_resolver", "vlm")


@dataclass(frozen=True)
class BackendBundle:
    classifier: Classifier
    embedder: Embedder
    super_resolver: SuperResolver
    vlm: Vlm

    def names(self) -> dict[str, str]:
        return {
            "classifier": self.classifier.descriptor.name,
            "embedder": self.embedder.descriptor.name,
            "super_resolver": self.super_resolver.descriptor.name,
            "vlm": self.vlm.descriptor.name,
        }


def _resolve_model_dir(model_dir: str | Path | None) -> Path:
    if model_dir is None:
        model_dir = os.environ.get(MODEL_DIR_ENV)
    if model_dir is None:
        raise BackendUnavailable(
            f"real backends need a model directory; pass one or set ${MODEL_DIR_ENV}"
        )
    path = Path(model_dir)
    if not path.is_dir():
        raise BackendUnavailable(f"model directory {path} does not exist")
    return path


def _real_classifier(model_dir: Path) -> Classifier:
    from .torch_adapter import TorchClassifier, load_torch_module

    return TorchClassifier(load_torch_module(model_dir / "classifier.pt"))


def _real_super_resolver(model_dir: Path) -> SuperResolver:
    from .torch_adapter import TorchSuperResolver, load_torch_module

    modules = {}
    for factor in (2, 4):
        path = model_dir / f"drct_x{factor}.pt"
        if path.exists():
            modules[factor] = load_torch_module(path)
    if not modules:
        raise BackendUnavailable(f"no drct_x2.pt or drct_x4.pt under {model_dir}")
    return TorchSuperResolver(modules, name="drct")


def _real_embedder(model_dir: Path) -> Embedder:
    from .torch_adapter import ClipEmbedder

    return ClipEmbedder(model_dir / "clip")


def _real_vlm(model_dir: Path) -> Vlm:
    from .torch_adapter import HfVlm

    return HfVlm(model_dir / "vlm", name="molmo")


def create_backends(
    names: str | Mapping[str, str] = "mock",
    seed: int = 0,
    model_dir: str | Path | None = None,
) -> BackendBundle:
    """Build one backend per kind.

    ``names`` is either a single name applied to every kind ("mock" or
    "real") or a mapping from kind to name. Mock backends are seeded so a
    bundle is reproducible from (names, seed) alone.
    """
    if isinstance(names, str):
        names = {kind: names for kind in KINDS}
    else:
        names = dict(names)
        for kind in KINDS:
            names.setdefault(kind, "mock")
    unknown = set(names) - set(KINDS)
    if unknown:
        raise ValueError(f"unknown backend kinds: {sorted(unknown)}")

    resolved_dir: Path | None = None
    if any(v != "mock" for v in names.values()):
        resolved_dir = _resolve_model_dir(model_dir)

    def build(kind: str):
        name = names[kind]
        if name == "mock":
            if kind == "classifier":
                return MockLinearClassifier.from_seed(seed)
            if kind == "embedder":
                return MockEmbedder()
            if kind == "super_resolver":
                return BicubicSuperResolver()
            return ScriptedVlm()
        if name == "real":
            if kind == "classifier":
                return _real_classifier(resolved_dir)
            if kind == "embedder":
                return _real_embedder(resolved_dir)
            if kind == "super_resolver":
                return _real_super_resolver(resolved_dir)
            return _real_vlm(resolved_dir)
        raise ValueError(f"unknown backend name {name!r} for kind {kind}")

    return BackendBundle(
        classifier=build("classifier"),
        embedder=build("embedder"),
        super_resolver=build("super_resolver"),
        vlm=build("vlm"),
    )
