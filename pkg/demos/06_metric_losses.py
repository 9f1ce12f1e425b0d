"""
Metric-learning losses over embeddings
======================================

Pairwise contrastive, triplet, their weighted combination, and the
temperature-scaled supervised contrastive loss over a labeled batch. All
are pure evaluators with analytic gradients.
"""

import numpy as np

from veritas import (
    LabeledEmbeddingBatch,
    LossConfig,
    combined_loss,
    contrastive_pair_loss,
    supervised_contrastive_loss,
    triplet_loss,
)
from veritas.losses import supervised_contrastive_gradient

gen = np.random.default_rng(5)

# Pairs: label 1 pulls embeddings together (squared distance), label 0
# pushes them past the margin (squared hinge on the unsquared distance).
pairs = [(gen.normal(size=8), gen.normal(size=8), int(gen.integers(0, 2))) for _ in range(32)]
lc = contrastive_pair_loss(pairs, margin=1.0)
print(f"contrastive loss over {len(pairs)} pairs: {lc:.4f}")

triplets = [(gen.normal(size=8), gen.normal(size=8), gen.normal(size=8)) for _ in range(32)]
lt = triplet_loss(triplets, margin=0.5)
print(f"triplet loss over {len(triplets)} triplets: {lt:.4f}")

cfg = LossConfig(alpha=0.5, beta=0.5, margin=1.0, temperature=0.5)
print(f"combined 0.5/0.5 mix: {combined_loss(lc, lt, cfg):.4f}")

# Supervised contrastive over a labeled batch: sharper temperatures separate
# classes harder; enormous temperatures flatten every row toward uniform,
# where the loss tends to log(N).
batch = LabeledEmbeddingBatch(gen.normal(size=(16, 8)), gen.integers(0, 2, 16))
for tau in (0.1, 0.5, 1.0, 1e6):
    print(f"  supcon(tau={tau:g}) = {supervised_contrastive_loss(batch, tau):.4f}")
print(f"  log(16) = {np.log(16):.4f}")

grad = supervised_contrastive_gradient(batch, tau=0.5)
print(f"gradient shape {grad.shape}, largest component {np.abs(grad).max():.4f}")
