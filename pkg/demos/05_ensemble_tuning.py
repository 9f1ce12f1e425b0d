"""
Ensemble weight search over the probability simplex
===================================================

Member models are consumed as per-sample fake-probability columns. Each
trial samples raw weights uniformly, normalizes them, and scores validation
accuracy at the 0.5 threshold; the first n trials are forced to one-hot
vectors so the result can never lose to its best single member.
"""

import numpy as np

from veritas import ensemble_predict, normalize_weights, search_weights

gen = np.random.default_rng(0)

# Three synthetic members on 200 validation samples: a strong one, a weak
# one, and one that's anti-correlated with the truth.
labels = gen.integers(0, 2, 200)
strong = np.clip(labels + gen.normal(0, 0.25, 200), 0, 1)
weak = np.clip(labels + gen.normal(0, 0.6, 200), 0, 1)
inverted = 1.0 - strong

probs = np.stack([strong, weak, inverted], axis=1)
for i, name in enumerate(["strong", "weak", "inverted"]):
    acc = np.mean((probs[:, i] >= 0.5).astype(int) == labels)
    print(f"member {name:9s} accuracy {acc:.3f}")

weights, best = search_weights(probs, labels, trials=300, seed=7)
print(f"\nbest weights {tuple(round(w, 3) for w in weights.weights)} "
      f"-> validation accuracy {best:.3f}")

# Weight normalization preserves ratios and ignores overall scale.
w = normalize_weights([2.0, 1.0, 1.0])
print("normalize [2,1,1]  ->", w.weights)
print("blend of (0.1, 0.5, 0.9):", ensemble_predict([0.1, 0.5, 0.9], w))
