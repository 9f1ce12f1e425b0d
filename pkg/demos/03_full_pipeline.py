"""
Full detection-and-explanation pipeline on one image
====================================================

classify -> heatmap -> super-resolve -> weighted patch voting -> scores ->
VLM explanations, all on deterministic mock backends. Reports serialize to
canonical JSON and validate against the shipped schema.
"""

import numpy as np

from veritas import RunConfig, analyze, create_backends, serialize_report
from veritas.reports import report_to_dict, validate_report_dict

# All-mock backends: a seeded linear classifier, a keyword embedder, the
# bicubic super-resolution fallback, and a VLM that answers from the prompt.
backends = create_backends("mock", seed=0)

# Build an image the seed-0 classifier calls fake: blend noise toward the
# sign pattern of its weight plane.
rng = np.random.default_rng(11)
direction = (np.sign(backends.classifier.weights) + 1.0) / 2.0
img = np.clip(0.55 * rng.uniform(0, 1, (32, 32, 3)) + 0.45 * direction, 0, 1)

config = RunConfig(sr_factor=4, patch_size=32, threshold=0.5, seed=0)
report = analyze(img, backends, config, image_id="demo_image")

print(f"verdict: {report.verdict} (p_fake = {report.fake_probability:.3f})")
print(f"category gate: {report.pipeline_meta['category']}")
print(f"scored artifacts: {len(report.artifact_scores)}, "
      f"inapplicable: {len(report.inapplicable_artifacts)}")

for score in report.artifact_scores:
    if score.retained:
        print(f"  retained {score.artifact_name}: S = {score.score:.3f}, counts {score.counts}")

for explanation in report.explanations:
    print(f"  explained {explanation.artifact} in {explanation.calls} call(s): "
          f"{explanation.description[:70]}...")

# The report round-trips losslessly and obeys the schema.
validate_report_dict(report_to_dict(report))
print("\nschema-valid report,", len(serialize_report(report)), "bytes serialized")
