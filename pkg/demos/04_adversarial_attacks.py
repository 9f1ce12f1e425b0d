"""
Adversarial attacks and the robustness harness
==============================================

Signed-gradient (FGSM), iterated projected (PGD), and wavelet-coefficient
attacks against a gradient-capable classifier, plus the accuracy-vs-epsilon
sweep. Every attack stays inside the L-infinity budget, even after pixel
clamping.
"""

import numpy as np

from veritas import AttackConfig, MockLinearClassifier, autoattack, evaluate_robustness, fgsm, pgd

rng = np.random.default_rng(3)
model = MockLinearClassifier.from_seed(13)

x = rng.uniform(0, 1, (32, 32, 3))
y = model.classify(x).prediction  # attack the model's own verdict
print(f"clean prediction: {y}")

cfg = AttackConfig(epsilon=0.03, alpha=0.01, iterations=10)
for name, attack in (("fgsm", fgsm), ("pgd", pgd)):
    result = attack(model, x, y, cfg)
    print(f"{name:8s} flipped={result.success}  linf={result.linf_distance:.4f}  "
          f"queries={result.queries}")

# PGD with one step of size epsilon IS fgsm, bit for bit.
one_step = AttackConfig(epsilon=0.03, alpha=0.03, iterations=1)
same = np.array_equal(
    fgsm(model, x, y, one_step).adversarial, pgd(model, x, y, one_step).adversarial
)
print("pgd(T=1, alpha=eps) == fgsm exactly:", same)

# The try-all suite stops at the first success.
result = autoattack(model, x, y, cfg)
print(f"autoattack flipped={result.success} after {result.queries} model queries")

# Accuracy under attack, swept over budgets. Labels here are the model's own
# clean predictions, so clean accuracy starts at 1.0 and can only fall.
dataset = []
for _ in range(20):
    img = rng.uniform(0, 1, (32, 32, 3))
    dataset.append((img, model.classify(img).prediction))

print("\n  eps    clean    adv")
for row in evaluate_robustness(model, dataset, "fgsm", cfg, epsilons=[0.0, 0.01, 0.03, 0.1]):
    print(f"  {row['epsilon']:<6g} {row['clean_acc']:<8.2f} {row['adv_acc']:.2f}")
