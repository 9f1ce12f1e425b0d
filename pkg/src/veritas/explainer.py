"""End-to-end artifact analysis: descriptors, voting, prompting, reports.

The full pipeline over one low-resolution image runs, in order: binary
classification, class activation heatmap on the native-resolution input,
super-resolution, heatmap interpolation onto the upscaled image, patch
tiling with heatmap-mass weights, three-way descriptor voting per patch,
weighted score aggregation per artifact, and prompted text explanation for
every artifact whose score clears the threshold.

Descriptor libraries pair each named artifact with three texts: a positive
description (the artifact is present), a negative one (the region is
realistic), and a neutral one (the region is irrelevant to this artifact).
A patch votes for whichever text its embedding is most similar to.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .backends.base import Embedder, Embedding, Vlm, cosine_similarity
from .backends.registry import BackendBundle
from .config import RunConfig
from .core import (
    ArtifactScore,
    PatchGrid,
    PatchVote,
    artifact_score,
    build_patch_grid,
    classify_vote,
    crop_patch,
    interpolate_heatmap,
    patch_weight,
)
from .errors import (
    ArtifactMismatch,
    BackendUnavailable,
    DuplicateArtifactName,
    MalformedResponse,
    MissingTupleField,
    NoRelevantPatches,
    ParseError,
)
from .images import as_image
from .reports import AnalysisReport, ExplanationFailure, ExplanationRecord, utc_timestamp
from .saliency import gradcam, save_heatmap_overlay

__all__ = [
    "ArtifactDescriptor",
    "ArtifactExplanation",
    "CATEGORIES",
    "CATEGORY_PROMPTS",
    "load_descriptor_library",
    "default_descriptor_library",
    "category_gate",
    "vote_patch",
    "score_image_artifacts",
    "build_prompt",
    "parse_vlm_response",
    "explain_retained",
    "analyze",
]

CATEGORIES = ("animal", "vehicle", "generic")

# Texts the category gate compares an image embedding against.
CATEGORY_PROMPTS: Mapping[str, str] = {
    "animal": "a photo of an animal",
    "vehicle": "a photo of a vehicle",
}

_DESCRIPTOR_FIELDS = ("name", "category", "positive_text", "negative_text", "neutral_text")


@dataclass(frozen=True)
class ArtifactDescriptor:
    """Named artifact with its positive/negative/neutral description texts."""

    name: str
    category: str
    positive_text: str
    negative_text: str
    neutral_text: str

    def __post_init__(self):
        if not self.name or not self.name.replace("_", "").isalnum() or self.name != self.name.lower():
            raise ValueError(f"descriptor name must be a snake_case identifier, got {self.name!r}")
        if self.category not in CATEGORIES:
            raise ValueError(f"category must be one of {CATEGORIES}, got {self.category!r}")
        texts = (self.positive_text, self.negative_text, self.neutral_text)
        if any(not t or not t.strip() for t in texts):
            raise MissingTupleField(f"descriptor {self.name}: all three texts must be non-empty")
        if len(set(texts)) != 3:
            raise ValueError(f"descriptor {self.name}: the three texts must be pairwise distinct")


@dataclass(frozen=True)
class ArtifactExplanation:
    """Validated explanation parsed from a VLM response."""

    artifact: str
    description: str


def _parse_descriptor_records(records, source: str) -> list[ArtifactDescriptor]:
    if not isinstance(records, list):
        raise ParseError(f"{source}: expected a JSON array of descriptor records")
    descriptors = []
    seen = set()
    for i, record in enumerate(records):
        if not isinstance(record, dict):
            raise ParseError(f"{source}: record {i} is not an object")
        missing = [f for f in _DESCRIPTOR_FIELDS if f not in record]
        if missing:
            raise MissingTupleField(f"{source}: record {i} is missing {missing}")
        descriptor = ArtifactDescriptor(**{f: record[f] for f in _DESCRIPTOR_FIELDS})
        if descriptor.name in seen:
            raise DuplicateArtifactName(f"{source}: duplicate descriptor name {descriptor.name!r}")
        seen.add(descriptor.name)
        descriptors.append(descriptor)
    return descriptors


def load_descriptor_library(path: str | Path) -> list[ArtifactDescriptor]:
    """Load and validate a descriptor library JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except OSError as exc:
        raise ParseError(f"cannot read descriptor library {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"descriptor library {path} is not valid JSON: {exc}")
    return _parse_descriptor_records(raw, str(path))


def default_descriptor_library() -> list[ArtifactDescriptor]:
    """The library shipped with the package."""
    raw = json.loads(resources.files("veritas.data").joinpath("artifact_library.json").read_text())
    return _parse_descriptor_records(raw, "builtin artifact library")


def category_gate(
    embedder: Embedder,
    image_embedding: Embedding,
    category_texts: Mapping[str, str] = CATEGORY_PROMPTS,
) -> str:
    """Pick the category whose text embeds closest to the image.

    An exact tie falls back to "generic", which keeps every descriptor set
    active rather than guessing.
    """
    similarities = {
        category: cosine_similarity(image_embedding, embedder.embed_text(text))
        for category, text in category_texts.items()
    }
    best = max(similarities.values())
    winners = [c for c in similarities if similarities[c] == best]
    if len(winners) != 1:
        return "generic"
    return winners[0]


def active_descriptors(library: Sequence[ArtifactDescriptor], category: str) -> list[ArtifactDescriptor]:
    """Descriptors voted on for a gated category (generic ones always run)."""
    if category == "generic":
        return list(library)
    return [d for d in library if d.category in (category, "generic")]


def _vote_from_embedding(
    patch_embedding: Embedding, descriptor: ArtifactDescriptor, embedder: Embedder
) -> PatchVote:
    sims = (
        cosine_similarity(patch_embedding, embedder.embed_text(descriptor.positive_text)),
        cosine_similarity(patch_embedding, embedder.embed_text(descriptor.negative_text)),
        cosine_similarity(patch_embedding, embedder.embed_text(descriptor.neutral_text)),
    )
    return PatchVote(kind=classify_vote(sims), similarities=sims)


def vote_patch(patch_img: np.ndarray, descriptor: ArtifactDescriptor, embedder: Embedder) -> PatchVote:
    """Three-way vote of one patch for one artifact descriptor."""
    return _vote_from_embedding(embedder.embed_image(as_image(patch_img)), descriptor, embedder)


def score_image_artifacts(
    img_sr: np.ndarray,
    heatmap_sr: np.ndarray,
    grid: PatchGrid,
    library: Sequence[ArtifactDescriptor],
    embedder: Embedder,
    threshold: float,
) -> tuple[list[ArtifactScore], list[dict]]:
    """Score every descriptor over the tiled super-resolved image.

    Returns (scores, inapplicable) where ``inapplicable`` records artifacts
    whose every patch voted neutral or carried zero weight; that outcome is
    reported with a reason instead of failing the image.
    """
    img_sr = as_image(img_sr)
    weights = [patch_weight(heatmap_sr, p) for p in grid.patches]
    patch_embeddings = [embedder.embed_image(crop_patch(img_sr, p)) for p in grid.patches]
    scores: list[ArtifactScore] = []
    inapplicable: list[dict] = []
    for descriptor in library:
        votes = [_vote_from_embedding(e, descriptor, embedder) for e in patch_embeddings]
        try:
            scores.append(artifact_score(weights, votes, threshold, artifact_name=descriptor.name))
        except NoRelevantPatches as exc:
            inapplicable.append({"artifact_name": descriptor.name, "reason": str(exc)})
    return scores, inapplicable


_PROMPT_INSTRUCTION = (
    "Instruction: You are a helpful assistant that identifies errors and artifacts in "
    "images. Given the error code, describe instances in the image where the error occurs."
)
_PROMPT_SCHEMA = '{"artifact": "...", "description": "..."}'
_PROMPT_EXAMPLE = (
    '{"artifact": "biological_asymmetry", '
    '"description": "In the given image, the horse has unsymmetrical eyes"}'
)
PROMPT_GUIDELINES = (
    "Only describe the given artifact. Do not mention unrelated defects.",
    "Limit each response to 1–2 lines.",
    'Use directional or anatomical terms (e.g., "left paw," "lower trunk").',
    'Highlight visibility using terms like "noticeable," "clearly seen," or "subtle."',
    "Follow the JSON schema strictly.",
)


def build_prompt(descriptor: ArtifactDescriptor) -> str:
    """Byte-stable explanation prompt for one artifact."""
    lines = [
        _PROMPT_INSTRUCTION,
        "",
        "JSON Schema:",
        _PROMPT_SCHEMA,
        "",
        "Example:",
        _PROMPT_EXAMPLE,
        "",
        "Guidelines:",
    ]
    lines.extend(f"- {g}" for g in PROMPT_GUIDELINES)
    lines.extend(
        [
            "",
            f"Artifact: {descriptor.name}",
            f"Error description: {descriptor.positive_text}",
        ]
    )
    return "\n".join(lines)


def _extract_first_json_object(text: str) -> dict | None:
    """First parseable JSON object in the text, tolerating surrounding prose."""
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = False
        escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            elif ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    try:
                        parsed = json.loads(text[start : i + 1])
                    except json.JSONDecodeError:
                        break
                    if isinstance(parsed, dict):
                        return parsed
                    break
        start = text.find("{", start + 1)
    return None


MAX_DESCRIPTION_CHARS = 300


def parse_vlm_response(text: str, valid_names: Sequence[str] | None = None) -> ArtifactExplanation:
    """Extract and validate the explanation object from raw VLM text.

    Raises :class:`MalformedResponse` when no JSON object with non-empty
    ``artifact`` and ``description`` strings (description at most 300
    characters) can be found, and :class:`ArtifactMismatch` when
    ``valid_names`` is given and the named artifact is not among them.
    """
    obj = _extract_first_json_object(text or "")
    if obj is None:
        raise MalformedResponse("no JSON object found in response")
    artifact = obj.get("artifact")
    description = obj.get("description")
    if not isinstance(artifact, str) or not artifact.strip():
        raise MalformedResponse("response is missing a non-empty 'artifact' field")
    if not isinstance(description, str) or not description.strip():
        raise MalformedResponse("response is missing a non-empty 'description' field")
    if len(description) > MAX_DESCRIPTION_CHARS:
        raise MalformedResponse(
            f"description exceeds {MAX_DESCRIPTION_CHARS} characters ({len(description)})"
        )
    if valid_names is not None and artifact not in set(valid_names):
        raise ArtifactMismatch(f"artifact {artifact!r} is not in the active library")
    return ArtifactExplanation(artifact=artifact, description=description)


def explain_retained(
    retained: Sequence[ArtifactDescriptor],
    vlm: Vlm,
    img: np.ndarray,
    retries: int = 2,
    valid_names: Sequence[str] | None = None,
) -> tuple[list[ExplanationRecord], list[ExplanationFailure]]:
    """Generate one validated explanation per retained artifact.

    Each artifact gets up to ``1 + retries`` generation attempts; an
    artifact whose every attempt fails is recorded as a failure instead of
    aborting the batch. No artifacts means no VLM calls at all.
    """
    records: list[ExplanationRecord] = []
    failures: list[ExplanationFailure] = []
    names = list(valid_names) if valid_names is not None else [d.name for d in retained]
    for descriptor in retained:
        prompt = build_prompt(descriptor)
        calls = 0
        last_error = "no attempts made"
        explanation = None
        for _ in range(1 + retries):
            calls += 1
            try:
                response = vlm.generate(prompt, img)
                explanation = parse_vlm_response(response, valid_names=names)
                break
            except (MalformedResponse, ArtifactMismatch) as exc:
                last_error = str(exc)
        if explanation is not None:
            records.append(
                ExplanationRecord(
                    artifact=explanation.artifact,
                    description=explanation.description,
                    calls=calls,
                )
            )
        else:
            failures.append(ExplanationFailure(artifact=descriptor.name, reason=last_error, calls=calls))
    return records, failures


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except BackendUnavailable as exc:
        if exc.stage is None:
            raise BackendUnavailable(str(exc), stage=name) from exc
        raise


def analyze(
    img: np.ndarray,
    backends: BackendBundle,
    config: RunConfig,
    image_id: str = "image",
    library: Sequence[ArtifactDescriptor] | None = None,
) -> AnalysisReport:
    """Run the full detection-and-explanation pipeline on one image.

    The activation heatmap is always computed on the classifier-native
    low-resolution image; patch voting happens on the super-resolved one.
    Images whose verdict is real skip voting and explanation unless
    ``config.explain_real`` is set. Backend failures surface as
    :class:`BackendUnavailable` tagged with the failing stage.
    """
    img = as_image(img)
    if library is None:
        if config.descriptor_library:
            library = load_descriptor_library(config.descriptor_library)
        else:
            library = default_descriptor_library()

    output = _stage("classify", backends.classifier.classify, img)
    verdict = output.prediction
    fake_probability = output.fake_probability

    category = None
    scores: list[ArtifactScore] = []
    inapplicable: list[dict] = []
    explanations: list[ExplanationRecord] = []
    failures: list[ExplanationFailure] = []

    if verdict == "fake" or config.explain_real:
        heat = _stage("gradcam", gradcam, backends.classifier, img, "fake")
        img_sr = _stage("super_resolve", backends.super_resolver.super_resolve, img, config.sr_factor)
        heat_sr = interpolate_heatmap(heat, img_sr.shape[:2])
        if config.overlay_dir:
            overlay_dir = Path(config.overlay_dir)
            overlay_dir.mkdir(parents=True, exist_ok=True)
            save_heatmap_overlay(img_sr, heat_sr, overlay_dir / f"{image_id}.overlay.png")
        grid = build_patch_grid(img_sr.shape[:2], config.patch_size)
        image_embedding = _stage("category_gate", backends.embedder.embed_image, img_sr)
        category = _stage("category_gate", category_gate, backends.embedder, image_embedding)
        active = active_descriptors(library, category)
        scores, inapplicable = _stage(
            "vote",
            score_image_artifacts,
            img_sr,
            heat_sr,
            grid,
            active,
            backends.embedder,
            config.threshold,
        )
        by_name = {d.name: d for d in active}
        retained = [by_name[s.artifact_name] for s in scores if s.retained]
        explanations, failures = _stage(
            "explain",
            explain_retained,
            retained,
            backends.vlm,
            img_sr,
            config.retries,
            [d.name for d in active],
        )

    meta = config.pipeline_meta(backends.names())
    meta["category"] = category
    return AnalysisReport(
        image_id=image_id,
        verdict=verdict,
        fake_probability=fake_probability,
        artifact_scores=tuple(scores),
        inapplicable_artifacts=tuple(
            (entry["artifact_name"], entry["reason"]) for entry in inapplicable
        ),
        explanations=tuple(explanations),
        explanation_failures=tuple(failures),
        artifact_flagged=any(s.retained for s in scores),
        pipeline_meta=meta,
        created_at=utc_timestamp(),
    )
