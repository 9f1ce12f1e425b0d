from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from veritas.backends import MockEmbedder, MockLinearClassifier
from veritas.images import save_image

GOLDEN_DIR = Path(__file__).parent / "golden"

_criterion_lines: list[str] = []


def record_criterion_line(line: str) -> None:
    _criterion_lines.append(line)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Surface one line per acceptance criterion in the run summary."""
    skipped_criteria = [
        rep.nodeid.split("::")[-1]
        for rep in terminalreporter.stats.get("skipped", [])
        if "test_criterion" in rep.nodeid
    ]
    if not _criterion_lines and not skipped_criteria:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_criterion_lines):
        terminalreporter.line(line)
    for name in skipped_criteria:
        number = int(name.split("_")[2])
        terminalreporter.line(
            f"[criterion {number:02d}] SKIP: real backend weights not installed "
            "(documented limitation)"
        )


def build_fixture_dataset(root: Path) -> list[Path]:
    """Ten deterministic 32x32 fixtures in CIFAKE layout: five plain random
    images (real verdicts under the seed-0 mock) and five blended toward the
    mock's weight-sign direction (fake verdicts)."""
    classifier = MockLinearClassifier.from_seed(0)
    direction = (np.sign(classifier.weights) + 1.0) / 2.0
    gen = np.random.default_rng(2024)
    (root / "test" / "REAL").mkdir(parents=True, exist_ok=True)
    (root / "test" / "FAKE").mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(10):
        base = gen.uniform(0, 1, (32, 32, 3))
        if i >= 5:
            img = np.clip(0.55 * base + 0.45 * direction, 0, 1)
            path = root / "test" / "FAKE" / f"img_{i:02d}.png"
        else:
            img = base
            path = root / "test" / "REAL" / f"img_{i:02d}.png"
        save_image(img, path)
        paths.append(path)
    return paths


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_image(rng, dims=(32, 32, 3)):
    return rng.uniform(0.0, 1.0, size=dims)


def central_difference_image_gradient(loss_fn, img, step=1e-4):
    """Finite-difference gradient of a scalar loss over an image array."""
    grad = np.zeros_like(img)
    it = np.nditer(img, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        bumped_up = img.copy()
        bumped_up[idx] += step
        bumped_down = img.copy()
        bumped_down[idx] -= step
        grad[idx] = (loss_fn(bumped_up) - loss_fn(bumped_down)) / (2 * step)
    return grad


@pytest.fixture
def mock_classifier():
    return MockLinearClassifier.from_seed(0)


@pytest.fixture
def mock_embedder():
    return MockEmbedder(dim=16, keyword_axes={"animal": 0, "vehicle": 1, "realistic": 2})
