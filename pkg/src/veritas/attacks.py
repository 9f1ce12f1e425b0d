"""Gradient-based evasion attacks and a robustness evaluation harness.

All attacks operate on [0, 1] images through a gradient-capable classifier
backend and are deterministic given (backend, input, config). Perturbations
respect the L-infinity budget ``epsilon``, including after the optional
valid-range clamp; the wavelet attack renormalizes its reconstructed
perturbation because its raw coefficient update carries no norm control.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .backends.base import Classifier, label_index
from .errors import DimMismatch, EmptyDataset, NonDyadicDims
from .images import as_image
from .wavelet import detail_mask, haar_forward, haar_inverse, is_pow2, pad_to_pow2

__all__ = [
    "AttackConfig",
    "AttackResult",
    "fgsm",
    "project_linf",
    "pgd",
    "wavelet_attack",
    "autoattack",
    "ATTACKS",
    "evaluate_robustness",
    "write_robustness_csv",
]


@dataclass(frozen=True)
class AttackConfig:
    """Attack parameters: budget, step size, iterations, wavelet depth."""

    epsilon: float = 0.03
    alpha: float = 0.01
    iterations: int = 10
    wavelet_levels: int = 2
    clamp_valid_range: bool = True
    pad_non_dyadic: bool = True

    def __post_init__(self):
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.wavelet_levels < 1:
            raise ValueError("wavelet_levels must be >= 1")


@dataclass(frozen=True)
class AttackResult:
    adversarial: np.ndarray
    success: bool  # prediction flipped relative to the clean input
    linf_distance: float
    queries: int  # classifier forward/gradient evaluations consumed


def project_linf(x_adv: np.ndarray, x: np.ndarray, epsilon: float) -> np.ndarray:
    """Clip ``x_adv`` elementwise into the epsilon box around ``x``."""
    x_adv = np.asarray(x_adv, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    if x_adv.shape != x.shape:
        raise DimMismatch(f"{x_adv.shape} vs {x.shape}")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return np.clip(x_adv, x - epsilon, x + epsilon)


def _finish(backend: Classifier, x: np.ndarray, adversarial: np.ndarray, queries: int) -> AttackResult:
    clean_prediction = backend.classify(x).prediction
    adv_prediction = backend.classify(adversarial).prediction
    return AttackResult(
        adversarial=adversarial,
        success=adv_prediction != clean_prediction,
        linf_distance=float(np.max(np.abs(adversarial - x))),
        queries=queries + 2,
    )


def fgsm(backend: Classifier, x: np.ndarray, y: str | int, cfg: AttackConfig) -> AttackResult:
    """Single signed-gradient step of size epsilon."""
    x = as_image(x)
    grad = backend.input_gradient(x, y)
    adv = x + cfg.epsilon * np.sign(grad)
    adv = project_linf(adv, x, cfg.epsilon)
    if cfg.clamp_valid_range:
        adv = np.clip(adv, 0.0, 1.0)
    return _finish(backend, x, adv, queries=1)


def pgd(backend: Classifier, x: np.ndarray, y: str | int, cfg: AttackConfig) -> AttackResult:
    """Iterated signed-gradient steps with projection back into the box.

    With one iteration and ``alpha == epsilon`` this reduces to
    :func:`fgsm` bit for bit: the update, projection, and clamp are the
    same operations in the same order.
    """
    x = as_image(x)
    adv = x.copy()
    for _ in range(cfg.iterations):
        grad = backend.input_gradient(adv, y)
        adv = adv + cfg.alpha * np.sign(grad)
        adv = project_linf(adv, x, cfg.epsilon)
        if cfg.clamp_valid_range:
            adv = np.clip(adv, 0.0, 1.0)
    return _finish(backend, x, adv, queries=cfg.iterations)


def _wavelet_perturb_plane(
    plane: np.ndarray, grad_plane: np.ndarray, epsilon: float, levels: int, pad: bool
) -> np.ndarray:
    if not (is_pow2(plane.shape[0]) and is_pow2(plane.shape[1])):
        if not pad:
            raise NonDyadicDims(
                f"plane dims {plane.shape} are not powers of two and padding is disabled"
            )
        padded, dims = pad_to_pow2(plane)
        padded_grad, _ = pad_to_pow2(grad_plane)
        out = _wavelet_perturb_plane(padded, padded_grad, epsilon, levels, pad=False)
        return out[: dims[0], : dims[1]]
    coeffs = haar_forward(plane, levels)
    # Orthonormality makes the coefficient-space gradient the forward
    # transform of the sample-space gradient.
    coeff_grad = haar_forward(grad_plane, levels)
    mask = detail_mask(plane.shape, levels)
    coeffs = coeffs + epsilon * coeff_grad * mask
    return haar_inverse(coeffs, levels)


def wavelet_attack(backend: Classifier, x: np.ndarray, y: str | int, cfg: AttackConfig) -> AttackResult:
    """Perturb detail coefficients of the first L wavelet levels.

    The coefficient update uses the raw gradient direction. Because that
    update alone carries no norm control, the reconstructed perturbation is
    rescaled (never grown) so its L-infinity size stays within epsilon.
    """
    x = as_image(x)
    grad = backend.input_gradient(x, y)
    adv = np.empty_like(x)
    for c in range(x.shape[2]):
        adv[:, :, c] = _wavelet_perturb_plane(
            x[:, :, c], grad[:, :, c], cfg.epsilon, cfg.wavelet_levels, cfg.pad_non_dyadic
        )
    delta = adv - x
    peak = float(np.max(np.abs(delta)))
    if peak > cfg.epsilon:
        delta = delta * (cfg.epsilon / peak)
    adv = x + delta
    if cfg.clamp_valid_range:
        adv = np.clip(adv, 0.0, 1.0)
    return _finish(backend, x, adv, queries=1)


ATTACKS: dict[str, Callable[..., AttackResult]] = {
    "fgsm": fgsm,
    "pgd": pgd,
    "wavelet": wavelet_attack,
}

DEFAULT_SUITE = ("fgsm", "pgd", "wavelet")


def _resolve_attack(attack) -> Callable[..., AttackResult]:
    if callable(attack):
        return attack
    try:
        return ATTACKS[attack]
    except KeyError:
        raise ValueError(f"unknown attack {attack!r}; expected one of {sorted(ATTACKS)}")


def autoattack(
    backend: Classifier,
    x: np.ndarray,
    y: str | int,
    cfg: AttackConfig,
    suite: Sequence = DEFAULT_SUITE,
) -> AttackResult:
    """Try a fixed suite of attacks in order, returning the first success.

    When nothing in the suite flips the prediction, the last member's
    result comes back with ``success=False``. Queries accumulate across
    every member that ran.
    """
    members = [_resolve_attack(a) for a in suite]
    if not members:
        raise ValueError("attack suite must be non-empty")
    total_queries = 0
    result = None
    for member in members:
        result = member(backend, x, y, cfg)
        total_queries += result.queries
        if result.success:
            break
    return replace(result, queries=total_queries)


def evaluate_robustness(
    backend: Classifier,
    dataset: Sequence[tuple[np.ndarray, str | int]],
    attack,
    cfg: AttackConfig,
    epsilons: Sequence[float] | None = None,
) -> list[dict]:
    """Clean vs adversarial accuracy per epsilon.

    ``dataset`` is a sequence of (image, true label) pairs. Returns one row
    per epsilon with keys epsilon, attack, clean_acc, adv_acc, n_samples.
    """
    if len(dataset) == 0:
        raise EmptyDataset("robustness evaluation needs at least one labeled sample")
    attack_fn = _resolve_attack(attack)
    attack_name = attack if isinstance(attack, str) else getattr(attack, "__name__", "custom")
    if epsilons is None:
        epsilons = [cfg.epsilon]

    labels = [label_index(y) for _, y in dataset]
    clean_hits = sum(
        int(label_index(backend.classify(as_image(x)).prediction) == y)
        for (x, _), y in zip(dataset, labels)
    )
    clean_acc = clean_hits / len(dataset)

    rows = []
    for epsilon in epsilons:
        eps_cfg = replace(cfg, epsilon=float(epsilon))
        adv_hits = 0
        for (x, y_raw), y in zip(dataset, labels):
            result = attack_fn(backend, as_image(x), y_raw, eps_cfg)
            adv_hits += int(label_index(backend.classify(result.adversarial).prediction) == y)
        rows.append(
            {
                "epsilon": float(epsilon),
                "attack": attack_name,
                "clean_acc": clean_acc,
                "adv_acc": adv_hits / len(dataset),
                "n_samples": len(dataset),
            }
        )
    return rows


def write_robustness_csv(rows: Sequence[dict], path: str | Path) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["epsilon", "attack", "clean_acc", "adv_acc", "n_samples"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
