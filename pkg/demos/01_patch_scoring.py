"""
Patch tiling, heatmap weighting, and artifact scoring
=====================================================

The numeric heart of the pipeline: an image is tiled into patches, each
patch inherits a weight equal to the saliency heatmap mass inside it, and
per-patch votes aggregate into a weighted evidence score.
"""

import numpy as np

from veritas import (
    PatchVote,
    artifact_score,
    build_patch_grid,
    interpolate_heatmap,
    patch_weight,
)

# Tile a 100x100 image with 32 px patches. The tiling is exact: boundary
# patches shrink to cover the 4 px remainder.
grid = build_patch_grid((100, 100), patch_size=32)
print(f"{len(grid.patches)} patches; last one is "
      f"{grid.patches[-1].height}x{grid.patches[-1].width} px")

# A coarse 4x4 "heatmap" upsampled to the image. Bilinear interpolation
# never invents values outside the input range.
coarse = np.array([
    [0.0, 0.1, 0.1, 0.0],
    [0.1, 0.9, 0.8, 0.1],
    [0.1, 0.8, 0.7, 0.1],
    [0.0, 0.1, 0.1, 0.0],
])
heat = interpolate_heatmap(coarse, (100, 100))
print(f"heatmap range after upsampling: [{heat.min():.2f}, {heat.max():.2f}]")

# Weight every patch by its heatmap mass. The total is conserved.
weights = [patch_weight(heat, p) for p in grid.patches]
print(f"sum of patch weights {sum(weights):.4f} == heatmap mass {heat.sum():.4f}")

# Pretend the four central patches voted "positive" for some artifact, the
# corners voted "negative", and the rest are irrelevant. Neutral patches
# drop out of both sums, so the score stays a weighted fraction in [0, 1].
POSITIVE = PatchVote("positive", (0.9, 0.1, 0.2))
NEGATIVE = PatchVote("negative", (0.1, 0.8, 0.3))
NEUTRAL = PatchVote("neutral", (0.1, 0.2, 0.9))

votes = []
for p in grid.patches:
    center = 34 <= p.row_offset <= 66 and 34 <= p.col_offset <= 66
    corner = p.row_offset in (0, 96) and p.col_offset in (0, 96)
    votes.append(POSITIVE if center else NEGATIVE if corner else NEUTRAL)

score = artifact_score(weights, votes, threshold=0.5, artifact_name="demo_artifact")
print(f"score {score.score:.3f}, votes (pos, neg, neutral) = {score.counts}, "
      f"retained: {score.retained}")

# The score is a ratio, so rescaling the heatmap changes nothing.
scaled = artifact_score([w * 250.0 for w in weights], votes, threshold=0.5)
print(f"after scaling every weight by 250: {scaled.score:.3f} (unchanged)")
