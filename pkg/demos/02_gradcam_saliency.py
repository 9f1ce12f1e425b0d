"""
Class activation heatmaps from a gradient-capable classifier
============================================================

GradCAM weighs each feature map by the spatial mean of the target score's
gradient, sums, and rectifies. With the mock linear classifier the math is
transparent: its feature layer is the identity over input channels and the
gradients are its weight planes.
"""

import numpy as np

from veritas import MockLinearClassifier, gradcam, normalize_heatmap, save_heatmap_overlay

rng = np.random.default_rng(7)

# A classifier whose fake-score is the mean of the (single-channel) image:
# the heatmap is then the image itself up to a positive scalar.
h = w = 32
clf = MockLinearClassifier(np.full((h, w, 1), 1.0 / (h * w)))
img = rng.uniform(0.0, 1.0, (h, w, 1))

heat = gradcam(clf, img, target_class="fake")
print("heatmap equals the image after normalization:",
      np.allclose(normalize_heatmap(heat), normalize_heatmap(img[:, :, 0]), atol=1e-9))

# A seeded random classifier gives a structured, non-negative map.
clf = MockLinearClassifier.from_seed(0, dims=(32, 32, 3))
img = rng.uniform(0.0, 1.0, (32, 32, 3))
heat = gradcam(clf, img, target_class="fake")
print(f"heatmap min {heat.min():.4f} (never negative), max {heat.max():.4f}")

# Normalization rescales to peak 1 and is idempotent.
norm = normalize_heatmap(heat)
print("peak after normalization:", norm.max())

# Export the blended overlay for a report.
save_heatmap_overlay(img, heat, "saliency_overlay.png", alpha=0.45)
print("wrote saliency_overlay.png")
