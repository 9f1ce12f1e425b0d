"""Weighted model ensembling and simplex weight search.

Member models are consumed as per-sample fake-probability tables, never as
live networks: the search decouples weight tuning from inference cost. A
trial draws raw weights uniformly from [0, 1]^n, normalizes them onto the
probability simplex, and scores validation accuracy at the 0.5 decision
threshold. The first n trials are forced to the n one-hot weight vectors,
so the selected ensemble can never score below its best single member on
the validation table.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import AllZeroWeights, DimMismatch, EmptyValidationSet, ParseError

__all__ = [
    "EnsembleWeights",
    "TrialRecord",
    "MemberTable",
    "normalize_weights",
    "ensemble_predict",
    "run_trials",
    "search_weights",
    "load_member_table",
]


@dataclass(frozen=True)
class EnsembleWeights:
    """Non-negative per-member weights summing to 1."""

    weights: tuple[float, ...]

    def __post_init__(self):
        if not self.weights:
            raise AllZeroWeights("ensemble needs at least one member")
        if any(w < 0 for w in self.weights):
            raise ValueError("ensemble weights must be non-negative")
        total = sum(self.weights)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"ensemble weights must sum to 1, got {total}")


@dataclass(frozen=True)
class TrialRecord:
    raw_weights: tuple[float, ...]
    validation_score: float


@dataclass(frozen=True)
class MemberTable:
    """Validation table: one fake-probability column per member model."""

    sample_ids: tuple[str, ...]
    labels: np.ndarray  # (N,) ints in {0 real, 1 fake}
    probs: np.ndarray  # (N, M) fake probabilities
    member_names: tuple[str, ...]


def normalize_weights(raw) -> EnsembleWeights:
    """Project raw non-negative weights onto the simplex, preserving ratios."""
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim != 1 or raw.size == 0:
        raise AllZeroWeights("raw weights must be a non-empty vector")
    if np.any(raw < 0):
        raise ValueError("raw weights must be non-negative")
    total = raw.sum()
    if total == 0.0:
        raise AllZeroWeights("all raw weights are zero")
    return EnsembleWeights(tuple(float(w) for w in raw / total))


def ensemble_predict(member_probs, w: EnsembleWeights) -> float:
    """Convex combination of member fake-probabilities."""
    probs = np.asarray(member_probs, dtype=np.float64)
    weights = np.asarray(w.weights)
    if probs.shape != weights.shape:
        raise DimMismatch(f"{probs.shape[0] if probs.ndim == 1 else probs.shape} probs vs {weights.shape[0]} weights")
    if np.any(probs < 0) or np.any(probs > 1):
        raise ValueError("member probabilities must lie in [0, 1]")
    return float(np.dot(probs, weights))


def _accuracy(probs: np.ndarray, labels: np.ndarray, weights: np.ndarray) -> float:
    combined = probs @ weights
    predictions = (combined >= 0.5).astype(np.int64)
    return float(np.mean(predictions == labels))


def run_trials(
    member_probs_per_sample,
    labels,
    trials: int,
    seed: int = 0,
) -> list[TrialRecord]:
    """Seeded trial sequence: one-hot injections first, then uniform draws."""
    probs = np.asarray(member_probs_per_sample, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if probs.ndim != 2 or probs.shape[0] == 0:
        raise EmptyValidationSet("need at least one validation sample")
    if labels.shape != (probs.shape[0],):
        raise DimMismatch(f"{labels.shape[0]} labels vs {probs.shape[0]} samples")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_members = probs.shape[1]
    rng = np.random.default_rng(seed)
    records = []
    for trial in range(trials):
        if trial < n_members:
            raw = np.zeros(n_members)
            raw[trial] = 1.0
        else:
            raw = rng.uniform(0.0, 1.0, size=n_members)
            if raw.sum() == 0.0:  # measure-zero guard
                raw = np.ones(n_members)
        normalized = np.asarray(normalize_weights(raw).weights)
        score = _accuracy(probs, labels, normalized)
        records.append(TrialRecord(raw_weights=tuple(map(float, raw)), validation_score=score))
    return records


def search_weights(
    member_probs_per_sample,
    labels,
    trials: int,
    seed: int = 0,
) -> tuple[EnsembleWeights, float]:
    """Best normalized weights over the seeded trial sequence.

    Ties keep the earliest trial, so results are stable under reordering of
    equal-scoring candidates and deterministic given the seed.
    """
    records = run_trials(member_probs_per_sample, labels, trials, seed)
    best_index = 0
    for i, record in enumerate(records):
        if record.validation_score > records[best_index].validation_score:
            best_index = i
    best = records[best_index]
    return normalize_weights(np.asarray(best.raw_weights)), best.validation_score


def load_member_table(path: str | Path) -> MemberTable:
    """Read a member-probability CSV: sample_id, label, member_1..member_n.

    Labels may be 0/1 or the strings real/fake.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file")
        header = [h.strip() for h in header]
        if len(header) < 3 or header[0] != "sample_id" or header[1] != "label":
            raise ParseError(
                f"{path}: header must start with sample_id,label followed by member columns"
            )
        member_names = tuple(header[2:])
        sample_ids, labels, rows = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{line_no}: expected {len(header)} fields, got {len(row)}")
            sample_ids.append(row[0].strip())
            labels.append(_parse_label(row[1].strip(), path, line_no))
            try:
                values = [float(v) for v in row[2:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{line_no}: {exc}")
            if any(not 0.0 <= v <= 1.0 for v in values):
                raise ParseError(f"{path}:{line_no}: probabilities must lie in [0, 1]")
            rows.append(values)
    if not rows:
        raise EmptyValidationSet(f"{path}: no data rows")
    return MemberTable(
        sample_ids=tuple(sample_ids),
        labels=np.asarray(labels, dtype=np.int64),
        probs=np.asarray(rows, dtype=np.float64),
        member_names=member_names,
    )


def _parse_label(text: str, path: Path, line_no: int) -> int:
    lowered = text.lower()
    if lowered in ("0", "real"):
        return 0
    if lowered in ("1", "fake"):
        return 1
    raise ParseError(f"{path}:{line_no}: label must be 0/1 or real/fake, got {text!r}")
