"""Run configuration: defaults, JSON config files, and flag overrides.

Every default is materialized here and echoed into each report's
``pipeline_meta`` so a report alone reproduces its run.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .attacks import AttackConfig
from .errors import ParseError

__all__ = ["RunConfig", "load_config"]


@dataclass(frozen=True)
class RunConfig:
    backends: str = "mock"  # a single name, or per-kind names in config files
    backend_names: dict | None = None  # per-kind overrides, e.g. {"vlm": "real"}
    sr_factor: int = 4
    patch_size: int = 32
    threshold: float = 0.5
    descriptor_library: str | None = None  # None -> packaged default library
    retries: int = 2
    seed: int = 0
    explain_real: bool = False
    epsilon: float = 0.03
    alpha: float = 0.01
    iterations: int = 10
    wavelet_levels: int = 2
    clamp_valid_range: bool = True
    workers: int = 1
    model_dir: str | None = None
    overlay_dir: str | None = None  # write <image_id>.overlay.png here when set

    def __post_init__(self):
        if self.sr_factor not in (2, 4):
            raise ValueError(f"sr_factor must be 2 or 4, got {self.sr_factor}")
        if self.patch_size < 1:
            raise ValueError("patch_size must be >= 1")
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def backend_selector(self):
        """What to hand the backend registry: one name or per-kind names."""
        if self.backend_names:
            merged = {kind: self.backends for kind in ("classifier", "embedder", "super_resolver", "vlm")}
            merged.update(self.backend_names)
            return merged
        return self.backends

    def attack_config(self) -> AttackConfig:
        return AttackConfig(
            epsilon=self.epsilon,
            alpha=self.alpha,
            iterations=self.iterations,
            wavelet_levels=self.wavelet_levels,
            clamp_valid_range=self.clamp_valid_range,
        )

    def with_overrides(self, **overrides) -> "RunConfig":
        """New config with every non-None override applied."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = set(changes) - {f.name for f in dataclasses.fields(self)}
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        return dataclasses.replace(self, **changes)

    def pipeline_meta(self, backend_names: dict[str, str]) -> dict:
        # Everything that could change an analysis result is echoed here.
        # Worker count is deliberately absent: reports must be byte-identical
        # regardless of how the batch was parallelized.
        return {
            "sr_factor": self.sr_factor,
            "patch_size": self.patch_size,
            "threshold": self.threshold,
            "backends": dict(backend_names),
            "descriptor_library": self.descriptor_library or "builtin",
            "retries": self.retries,
            "seed": self.seed,
            "explain_real": self.explain_real,
            "attack": {
                "epsilon": self.epsilon,
                "alpha": self.alpha,
                "iterations": self.iterations,
                "wavelet_levels": self.wavelet_levels,
                "clamp_valid_range": self.clamp_valid_range,
            },
        }


def load_config(path: str | Path | None) -> RunConfig:
    """Config from a JSON file; a missing path yields pure defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ParseError(f"config {path} must hold a JSON object")
    try:
        return RunConfig().with_overrides(**raw)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"config {path}: {exc}")
