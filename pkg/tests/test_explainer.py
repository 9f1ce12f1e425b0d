from __future__ import annotations

import json

import numpy as np
import pytest

from veritas.backends import (
    BackendBundle,
    BicubicSuperResolver,
    MockEmbedder,
    MockLinearClassifier,
    ScriptedVlm,
)
from veritas.config import RunConfig
from veritas.core import build_patch_grid
from veritas.errors import (
    ArtifactMismatch,
    BackendUnavailable,
    DuplicateArtifactName,
    MalformedResponse,
    MissingTupleField,
    ParseError,
)
from veritas.explainer import (
    ArtifactDescriptor,
    PROMPT_GUIDELINES,
    analyze,
    build_prompt,
    category_gate,
    default_descriptor_library,
    explain_retained,
    load_descriptor_library,
    parse_vlm_response,
    score_image_artifacts,
    vote_patch,
)
from veritas.reports import parse_report, report_to_dict, serialize_report, validate_report_dict


def descriptor(**overrides):
    base = dict(
        name="test_artifact",
        category="generic",
        positive_text="shows the alpha anomaly clearly",
        negative_text="looks beta normal and realistic",
        neutral_text="contains gamma content unrelated to the artifact",
    )
    base.update(overrides)
    return ArtifactDescriptor(**base)


# Embedder wiring: texts with these keywords land on dedicated axes, and a
# constant patch of value (axis + 0.5) / 16 lands on the same axis.
STEERED = MockEmbedder(
    dim=16,
    keyword_axes={"animal": 0, "vehicle": 1, "alpha": 3, "beta": 4, "gamma": 5},
)


def patch_value(axis: int, dim: int = 16) -> float:
    return (axis + 0.5) / dim


class TestDescriptorLibrary:
    def test_default_library_loads(self):
        library = default_descriptor_library()
        by_name = {d.name: d for d in library}
        assert by_name["misaligned_body_panels"].category == "vehicle"
        assert "biological_asymmetry" in by_name
        assert len({d.name for d in library}) == len(library)

    def test_load_from_file(self, tmp_path):
        path = tmp_path / "lib.json"
        path.write_text(json.dumps([descriptor().__dict__]))
        loaded = load_descriptor_library(path)
        assert loaded == [descriptor()]

    def test_missing_field(self, tmp_path):
        record = descriptor().__dict__.copy()
        del record["neutral_text"]
        path = tmp_path / "lib.json"
        path.write_text(json.dumps([record]))
        with pytest.raises(MissingTupleField):
            load_descriptor_library(path)

    def test_duplicate_names(self, tmp_path):
        path = tmp_path / "lib.json"
        path.write_text(json.dumps([descriptor().__dict__, descriptor().__dict__]))
        with pytest.raises(DuplicateArtifactName):
            load_descriptor_library(path)

    def test_unparseable_file(self, tmp_path):
        path = tmp_path / "lib.json"
        path.write_text("not json {")
        with pytest.raises(ParseError):
            load_descriptor_library(path)

    def test_empty_text_rejected(self):
        with pytest.raises(MissingTupleField):
            descriptor(neutral_text="   ")

    def test_identical_texts_rejected(self):
        with pytest.raises(ValueError):
            descriptor(negative_text="shows the alpha anomaly clearly")

    def test_bad_name_rejected(self):
        with pytest.raises(ValueError):
            descriptor(name="Not Snake Case")


class TestCategoryGate:
    def test_animal_image(self):
        emb = STEERED.embed_image(np.full((4, 4, 1), patch_value(0)))
        assert category_gate(STEERED, emb) == "animal"

    def test_vehicle_image(self):
        emb = STEERED.embed_image(np.full((4, 4, 1), patch_value(1)))
        assert category_gate(STEERED, emb) == "vehicle"

    def test_tie_falls_back_to_generic(self):
        # An image on axis 7 is orthogonal to both category texts.
        emb = STEERED.embed_image(np.full((4, 4, 1), patch_value(7)))
        assert category_gate(STEERED, emb) == "generic"


class TestVotePatch:
    def test_positive_match_scores_one(self):
        patch = np.full((8, 8, 1), patch_value(3))  # axis of "alpha"
        v = vote_patch(patch, descriptor(), STEERED)
        assert v.kind == "positive"
        assert v.similarities[0] == 1.0

    def test_negative_match(self):
        patch = np.full((8, 8, 1), patch_value(4))
        assert vote_patch(patch, descriptor(), STEERED).kind == "negative"

    def test_orthogonal_patch_is_neutral_by_tie_rule(self):
        patch = np.full((8, 8, 1), patch_value(9))
        v = vote_patch(patch, descriptor(), STEERED)
        assert v.kind == "neutral"
        assert v.similarities == (0.0, 0.0, 0.0)


class TestScoreImageArtifacts:
    def build_quadrant_image(self, values, size=16):
        img = np.zeros((size, size, 1))
        half = size // 2
        img[:half, :half] = values[0]
        img[:half, half:] = values[1]
        img[half:, :half] = values[2]
        img[half:, half:] = values[3]
        return img

    def test_three_of_four_positive_equal_weights(self):
        img = self.build_quadrant_image(
            [patch_value(3), patch_value(3), patch_value(3), patch_value(4)]
        )
        grid = build_patch_grid((16, 16), 8)
        heat = np.ones((16, 16))
        scores, inapplicable = score_image_artifacts(img, heat, grid, [descriptor()], STEERED, 0.5)
        assert not inapplicable
        (score,) = scores
        assert score.score == pytest.approx(0.75, abs=1e-12)
        assert score.counts == (3, 1, 0)
        assert score.retained

    def test_all_neutral_reported_inapplicable(self):
        img = self.build_quadrant_image([patch_value(9)] * 4)
        grid = build_patch_grid((16, 16), 8)
        scores, inapplicable = score_image_artifacts(
            img, np.ones((16, 16)), grid, [descriptor()], STEERED, 0.5
        )
        assert scores == []
        assert inapplicable[0]["artifact_name"] == "test_artifact"
        assert "neutral" in inapplicable[0]["reason"]

    def test_zero_heatmap_makes_everything_inapplicable(self):
        img = self.build_quadrant_image([patch_value(3)] * 4)
        grid = build_patch_grid((16, 16), 8)
        scores, inapplicable = score_image_artifacts(
            img, np.zeros((16, 16)), grid, [descriptor()], STEERED, 0.5
        )
        assert scores == []
        assert len(inapplicable) == 1


class TestBuildPrompt:
    def test_contains_required_pieces(self):
        prompt = build_prompt(descriptor())
        assert "Limit each response to 1–2 lines." in prompt
        assert '{"artifact": "...", "description": "..."}' in prompt
        assert (
            '{"artifact": "biological_asymmetry", '
            '"description": "In the given image, the horse has unsymmetrical eyes"}' in prompt
        )
        for guideline in PROMPT_GUIDELINES:
            assert guideline in prompt
        assert "Artifact: test_artifact" in prompt
        assert "shows the alpha anomaly clearly" in prompt

    def test_byte_stable(self):
        assert build_prompt(descriptor()) == build_prompt(descriptor())


class TestParseVlmResponse:
    def test_worked_example_object(self):
        text = '{"artifact": "biological_asymmetry", "description": "In the given image, the horse has unsymmetrical eyes"}'
        result = parse_vlm_response(text, valid_names=["biological_asymmetry"])
        assert result.artifact == "biological_asymmetry"
        assert "unsymmetrical eyes" in result.description

    def test_surrounding_prose_tolerated(self):
        text = 'sure! here you go: {"artifact": "x", "description": "y"} hope that helps'
        result = parse_vlm_response(text, valid_names=["x"])
        assert (result.artifact, result.description) == ("x", "y")

    def test_missing_description(self):
        with pytest.raises(MalformedResponse):
            parse_vlm_response('{"artifact": "x"}')

    def test_missing_artifact(self):
        with pytest.raises(MalformedResponse):
            parse_vlm_response('{"description": "y"}')

    def test_no_json_at_all(self):
        with pytest.raises(MalformedResponse):
            parse_vlm_response("I could not find anything noteworthy.")

    def test_empty_description(self):
        with pytest.raises(MalformedResponse):
            parse_vlm_response('{"artifact": "x", "description": "  "}')

    def test_overlong_description(self):
        with pytest.raises(MalformedResponse):
            parse_vlm_response(json.dumps({"artifact": "x", "description": "a" * 301}))

    def test_unknown_artifact(self):
        with pytest.raises(ArtifactMismatch):
            parse_vlm_response('{"artifact": "nope", "description": "y"}', valid_names=["x"])

    def test_braces_inside_strings(self):
        text = 'prefix {"artifact": "x", "description": "shows { braces } inside"} suffix'
        assert parse_vlm_response(text).description == "shows { braces } inside"

    def test_skips_invalid_object_then_finds_valid(self):
        text = '{broken json} then {"artifact": "x", "description": "y"}'
        assert parse_vlm_response(text).artifact == "x"


class TestExplainRetained:
    def test_malformed_then_valid_uses_two_calls(self, rng):
        vlm = ScriptedVlm(script=["garbage", '{"artifact": "test_artifact", "description": "d"}'])
        records, failures = explain_retained([descriptor()], vlm, np.zeros((4, 4, 1)), retries=2)
        assert failures == []
        assert records[0].calls == 2
        assert vlm.calls == 2

    def test_retry_exhaustion_records_failure(self):
        vlm = ScriptedVlm(script=["still garbage"])
        records, failures = explain_retained([descriptor()], vlm, np.zeros((4, 4, 1)), retries=2)
        assert records == []
        assert failures[0].calls == 3
        assert vlm.calls == 3
        assert failures[0].artifact == "test_artifact"

    def test_zero_retained_means_zero_calls(self):
        vlm = ScriptedVlm(script=["should never be used"])
        records, failures = explain_retained([], vlm, np.zeros((4, 4, 1)), retries=2)
        assert records == failures == []
        assert vlm.calls == 0


def steered_bundle(bias=4.0, weight=0.001):
    classifier = MockLinearClassifier(np.full((32, 32, 3), weight), bias=bias)
    return BackendBundle(
        classifier=classifier,
        embedder=STEERED,
        super_resolver=BicubicSuperResolver(),
        vlm=ScriptedVlm(),
    )


def quadrant_image_32(values):
    img = np.zeros((32, 32, 3))
    img[:16, :16] = values[0]
    img[:16, 16:] = values[1]
    img[16:, :16] = values[2]
    img[16:, 16:] = values[3]
    return img


@pytest.fixture
def fake_leaning_inputs():
    img = quadrant_image_32([patch_value(3), patch_value(3), patch_value(3), patch_value(4)])
    cfg = RunConfig(patch_size=64, sr_factor=4, seed=0)
    return img, cfg


class TestAnalyze:
    def test_full_pipeline_report(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        report = analyze(img, steered_bundle(), cfg, image_id="demo", library=[descriptor()])
        assert report.verdict == "fake"
        assert report.artifact_flagged
        (score,) = report.artifact_scores
        assert score.counts == (3, 1, 0)
        assert score.retained
        (explanation,) = report.explanations
        assert explanation.artifact == "test_artifact"
        assert explanation.calls == 1
        assert report.pipeline_meta["category"] == "generic"
        assert report.pipeline_meta["backends"]["classifier"] == "mock-linear"

    def test_real_verdict_skips_voting_by_default(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        report = analyze(img, steered_bundle(bias=-4.0), cfg, library=[descriptor()])
        assert report.verdict == "real"
        assert report.artifact_scores == ()
        assert report.explanations == ()
        assert report.pipeline_meta["category"] is None

    def test_explain_real_override_runs_voting(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        cfg = cfg.with_overrides(explain_real=True)
        report = analyze(img, steered_bundle(bias=-4.0), cfg, library=[descriptor()])
        assert report.verdict == "real"
        assert len(report.artifact_scores) == 1

    def test_gradcam_runs_on_native_resolution(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        bundle = steered_bundle()
        seen = []
        original = bundle.classifier.saliency_tensors

        def spy(image, target):
            seen.append(image.shape)
            return original(image, target)

        bundle.classifier.saliency_tensors = spy
        analyze(img, bundle, cfg, library=[descriptor()])
        assert seen == [(32, 32, 3)]

    def test_missing_super_resolver_names_stage(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs

        class NoWeights(BicubicSuperResolver):
            def super_resolve(self, image, factor):
                raise BackendUnavailable("drct weights not found")

        bundle = steered_bundle()
        broken = BackendBundle(
            classifier=bundle.classifier,
            embedder=bundle.embedder,
            super_resolver=NoWeights(),
            vlm=bundle.vlm,
        )
        with pytest.raises(BackendUnavailable) as err:
            analyze(img, broken, cfg, library=[descriptor()])
        assert err.value.stage == "super_resolve"
        assert "super_resolve" in str(err.value)

    def test_report_serialization_round_trips(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        report = analyze(img, steered_bundle(), cfg, image_id="rt", library=[descriptor()])
        assert parse_report(serialize_report(report)) == report

    def test_report_validates_against_schema(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        report = analyze(img, steered_bundle(), cfg, image_id="sv", library=[descriptor()])
        validate_report_dict(report_to_dict(report))

    def test_bit_reproducible_with_mocks(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        a = analyze(img, steered_bundle(), cfg, image_id="x", library=[descriptor()])
        b = analyze(img, steered_bundle(), cfg, image_id="x", library=[descriptor()])
        masked_a = report_to_dict(a)
        masked_b = report_to_dict(b)
        masked_a["created_at"] = masked_b["created_at"] = "MASKED"
        assert json.dumps(masked_a, sort_keys=True) == json.dumps(masked_b, sort_keys=True)

    def test_retained_iff_explanation_attempt_exists(self, fake_leaning_inputs):
        img, cfg = fake_leaning_inputs
        report = analyze(img, steered_bundle(), cfg, library=[descriptor()])
        retained = {s.artifact_name for s in report.artifact_scores if s.retained}
        attempted = {e.artifact for e in report.explanations} | {
            f.artifact for f in report.explanation_failures
        }
        assert retained == attempted
