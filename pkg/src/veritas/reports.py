"""Analysis reports: structure, canonical JSON, schema validation.

Serialization is canonical (sorted keys, two-space indent, trailing
newline) so identical analyses produce byte-identical files. The creation
timestamp is the one non-deterministic value and lives in a single field,
``created_at``, which golden-file comparisons mask.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path

import jsonschema

from .core import ArtifactScore
from .errors import ParseError

__all__ = [
    "ExplanationRecord",
    "ExplanationFailure",
    "AnalysisReport",
    "TIMESTAMP_FIELD",
    "utc_timestamp",
    "report_to_dict",
    "report_from_dict",
    "serialize_report",
    "parse_report",
    "load_report_schema",
    "validate_report_dict",
    "write_report",
]

TIMESTAMP_FIELD = "created_at"


def utc_timestamp() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class ExplanationRecord:
    artifact: str
    description: str
    calls: int


@dataclass(frozen=True)
class ExplanationFailure:
    artifact: str
    reason: str
    calls: int


@dataclass(frozen=True)
class AnalysisReport:
    """Everything the pipeline concluded about one image.

    Explanation records and failures together cover exactly the retained
    artifacts; ``pipeline_meta`` echoes the full effective configuration.
    """

    image_id: str
    verdict: str
    fake_probability: float
    artifact_scores: tuple[ArtifactScore, ...]
    inapplicable_artifacts: tuple[tuple[str, str], ...]
    explanations: tuple[ExplanationRecord, ...]
    explanation_failures: tuple[ExplanationFailure, ...]
    artifact_flagged: bool
    pipeline_meta: dict
    created_at: str


def report_to_dict(report: AnalysisReport) -> dict:
    return {
        "image_id": report.image_id,
        "verdict": report.verdict,
        "fake_probability": float(report.fake_probability),
        "artifact_flagged": bool(report.artifact_flagged),
        "artifact_scores": [
            {
                "artifact_name": s.artifact_name,
                "score": float(s.score),
                "counts": {
                    "positive": int(s.counts[0]),
                    "negative": int(s.counts[1]),
                    "neutral": int(s.counts[2]),
                },
                "retained": bool(s.retained),
            }
            for s in report.artifact_scores
        ],
        "inapplicable_artifacts": [
            {"artifact_name": name, "reason": reason}
            for name, reason in report.inapplicable_artifacts
        ],
        "explanations": [
            {"artifact": e.artifact, "description": e.description, "calls": int(e.calls)}
            for e in report.explanations
        ],
        "explanation_failures": [
            {"artifact": f.artifact, "reason": f.reason, "calls": int(f.calls)}
            for f in report.explanation_failures
        ],
        "pipeline_meta": report.pipeline_meta,
        TIMESTAMP_FIELD: report.created_at,
    }


def report_from_dict(data: dict) -> AnalysisReport:
    try:
        return AnalysisReport(
            image_id=data["image_id"],
            verdict=data["verdict"],
            fake_probability=float(data["fake_probability"]),
            artifact_scores=tuple(
                ArtifactScore(
                    artifact_name=s["artifact_name"],
                    score=float(s["score"]),
                    counts=(
                        int(s["counts"]["positive"]),
                        int(s["counts"]["negative"]),
                        int(s["counts"]["neutral"]),
                    ),
                    retained=bool(s["retained"]),
                )
                for s in data["artifact_scores"]
            ),
            inapplicable_artifacts=tuple(
                (entry["artifact_name"], entry["reason"])
                for entry in data["inapplicable_artifacts"]
            ),
            explanations=tuple(
                ExplanationRecord(
                    artifact=e["artifact"], description=e["description"], calls=int(e["calls"])
                )
                for e in data["explanations"]
            ),
            explanation_failures=tuple(
                ExplanationFailure(
                    artifact=f["artifact"], reason=f["reason"], calls=int(f["calls"])
                )
                for f in data["explanation_failures"]
            ),
            artifact_flagged=bool(data["artifact_flagged"]),
            pipeline_meta=data["pipeline_meta"],
            created_at=data[TIMESTAMP_FIELD],
        )
    except (KeyError, TypeError) as exc:
        raise ParseError(f"report dict is missing or mistypes a field: {exc}")


def serialize_report(report: AnalysisReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n"


def parse_report(text: str) -> AnalysisReport:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"report is not valid JSON: {exc}")
    return report_from_dict(data)


def load_report_schema() -> dict:
    return json.loads(resources.files("veritas.data").joinpath("report_schema.json").read_text())


def validate_report_dict(data: dict) -> None:
    """Raise ``jsonschema.ValidationError`` if the dict breaks the schema."""
    jsonschema.validate(instance=data, schema=load_report_schema())


def write_report(report: AnalysisReport, path: str | Path) -> None:
    """Atomic write: serialize to a temp file, then rename into place."""
    write_text_atomic(serialize_report(report), path)


def write_text_atomic(text: str, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_text(text)
    tmp.replace(path)
