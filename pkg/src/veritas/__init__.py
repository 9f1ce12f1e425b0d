"""Forensic toolkit for small-image synthetic-content detection.

The pipeline classifies a 32x32 image as real or AI-generated, localizes the
evidence with a gradient-weighted activation heatmap, super-resolves the
image, votes artifact descriptors over heatmap-weighted patches, and asks a
vision-language backend for a short, schema-validated explanation of every
artifact whose evidence score clears the threshold. Deterministic mock
backends make the whole thing runnable and exactly testable offline; adapters
accept real pre-trained models where available.
"""

from .backends import (
    BackendBundle,
    BicubicSuperResolver,
    ClassifierOutput,
    Embedding,
    MockEmbedder,
    MockLinearClassifier,
    ScriptedVlm,
    cosine_similarity,
    create_backends,
)
from .config import RunConfig, load_config
from .core import (
    ArtifactScore,
    Patch,
    PatchGrid,
    PatchVote,
    artifact_score,
    build_patch_grid,
    classify_vote,
    crop_patch,
    encode_vote,
    interpolate_heatmap,
    patch_weight,
    with_patch_weights,
)
from .ensemble import (
    EnsembleWeights,
    TrialRecord,
    ensemble_predict,
    load_member_table,
    normalize_weights,
    search_weights,
)
from .explainer import (
    ArtifactDescriptor,
    ArtifactExplanation,
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
from .attacks import (
    AttackConfig,
    AttackResult,
    autoattack,
    evaluate_robustness,
    fgsm,
    pgd,
    project_linf,
    wavelet_attack,
)
from .losses import (
    LabeledEmbeddingBatch,
    LossConfig,
    combined_loss,
    contrastive_pair_loss,
    supervised_contrastive_loss,
    triplet_loss,
)
from .reports import AnalysisReport, parse_report, serialize_report, validate_report_dict
from .saliency import gradcam, normalize_heatmap, save_heatmap_overlay
from .wavelet import haar_forward, haar_inverse

__version__ = "0.1.0"
