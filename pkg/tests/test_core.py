from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from veritas.core import (
    ArtifactScore,
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
from veritas.errors import (
    NoRelevantPatches,
    PatchOutOfBounds,
    ShapeMismatch,
    ZeroDimension,
)


def vote(kind):
    sims = {"positive": (1.0, 0.0, 0.0), "negative": (0.0, 1.0, 0.0), "neutral": (0.0, 0.0, 1.0)}
    return PatchVote(kind=kind, similarities=sims[kind])


def weighted_mean_oracle(weights, votes):
    """Independent scalar-loop weighted-vote aggregation used to check scores."""
    numer = 0.0
    denom = 0.0
    for w, v in zip(weights, votes):
        if v.kind == "neutral":
            continue
        value = 1.0 if v.kind == "positive" else 0.0
        numer += w * value
        denom += w
    if denom == 0.0:
        return None
    return numer / denom


class TestBuildPatchGrid:
    def test_exact_division(self):
        grid = build_patch_grid((128, 128), 32)
        assert len(grid.patches) == 16
        assert all(p.height == 32 and p.width == 32 for p in grid.patches)

    def test_identity_tiling(self):
        grid = build_patch_grid((32, 32), 32)
        assert len(grid.patches) == 1
        p = grid.patches[0]
        assert (p.row_offset, p.col_offset, p.height, p.width) == (0, 0, 32, 32)

    def test_boundary_remainders(self):
        # 100 = 3*32 + 4: four patch columns/rows, the last ones 4 px wide.
        grid = build_patch_grid((100, 100), 32)
        assert len(grid.patches) == 16
        for p in grid.patches:
            assert p.height == (4 if p.row_offset == 96 else 32)
            assert p.width == (4 if p.col_offset == 96 else 32)

    @pytest.mark.parametrize("dims,patch", [((0, 10), 4), ((10, 0), 4), ((10, 10), 0)])
    def test_zero_dimension(self, dims, patch):
        with pytest.raises(ZeroDimension):
            build_patch_grid(dims, patch)

    @given(
        h=st.integers(min_value=1, max_value=97),
        w=st.integers(min_value=1, max_value=97),
        patch=st.integers(min_value=1, max_value=40),
    )
    @settings(max_examples=60, deadline=None)
    def test_tiling_exactness(self, h, w, patch):
        grid = build_patch_grid((h, w), patch)
        coverage = np.zeros((h, w), dtype=int)
        for p in grid.patches:
            coverage[p.row_offset : p.row_offset + p.height, p.col_offset : p.col_offset + p.width] += 1
        assert np.all(coverage == 1)
        assert len(grid.patches) == -(-h // patch) * -(-w // patch)


class TestInterpolateHeatmap:
    def test_constant_stays_constant(self):
        h = np.full((3, 5), 0.37)
        out = interpolate_heatmap(h, (9, 20))
        assert out.shape == (9, 20)
        np.testing.assert_allclose(out, 0.37, rtol=0, atol=1e-12)

    def test_two_by_two_upscale(self):
        # Bilinear samples of [[0,1],[0,1]] at positions linspace(0,1,4):
        # every row identical, values 0, 1/3, 2/3, 1.
        out = interpolate_heatmap(np.array([[0.0, 1.0], [0.0, 1.0]]), (4, 4))
        expected_row = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0])
        for row in out:
            np.testing.assert_allclose(row, expected_row, atol=1e-12)
        assert np.all(np.diff(out, axis=1) >= 0)

    def test_identity(self, rng):
        h = rng.uniform(0, 2, (7, 11))
        np.testing.assert_array_equal(interpolate_heatmap(h, (7, 11)), h)

    def test_zero_target(self):
        with pytest.raises(ZeroDimension):
            interpolate_heatmap(np.ones((4, 4)), (0, 4))

    @given(
        sh=st.integers(1, 12), sw=st.integers(1, 12),
        th=st.integers(1, 24), tw=st.integers(1, 24),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=60, deadline=None)
    def test_range_preserved(self, sh, sw, th, tw, seed):
        h = np.random.default_rng(seed).uniform(0, 5, (sh, sw))
        out = interpolate_heatmap(h, (th, tw))
        assert out.shape == (th, tw)
        assert out.min() >= h.min() - 1e-12
        assert out.max() <= h.max() + 1e-12
        assert out.min() >= 0


class TestPatchWeight:
    def test_uniform_counts_pixels(self):
        grid = build_patch_grid((16, 16), 8)
        h = np.ones((16, 16))
        assert patch_weight(h, grid.patches[0]) == 64.0

    def test_zero_heatmap(self):
        grid = build_patch_grid((16, 16), 8)
        assert patch_weight(np.zeros((16, 16)), grid.patches[2]) == 0.0

    def test_matches_nested_loop_oracle(self, rng):
        h = rng.uniform(0, 1, (16, 16))
        grid = build_patch_grid((16, 16), 4)
        for p in grid.patches:
            acc = 0.0
            for r in range(p.row_offset, p.row_offset + p.height):
                for c in range(p.col_offset, p.col_offset + p.width):
                    acc += h[r, c]
            assert patch_weight(h, p) == pytest.approx(acc, rel=1e-12)

    def test_out_of_bounds(self):
        from veritas.core import Patch

        with pytest.raises(PatchOutOfBounds):
            patch_weight(np.ones((8, 8)), Patch(4, 4, 8, 8))

    @given(
        h=st.integers(1, 40), w=st.integers(1, 40), patch=st.integers(1, 17),
        seed=st.integers(0, 10_000),
    )
    @settings(max_examples=60, deadline=None)
    def test_weight_conservation(self, h, w, patch, seed):
        heat = np.random.default_rng(seed).uniform(0, 3, (h, w))
        grid = build_patch_grid((h, w), patch)
        total = sum(patch_weight(heat, p) for p in grid.patches)
        assert total == pytest.approx(heat.sum(), rel=1e-9)

    def test_with_patch_weights(self, rng):
        heat = rng.uniform(0, 1, (12, 12))
        grid = build_patch_grid((12, 12), 5)
        weighted = with_patch_weights(grid, heat)
        for p in weighted.patches:
            assert p.weight == patch_weight(heat, p)
        with pytest.raises(ShapeMismatch):
            with_patch_weights(grid, np.ones((4, 4)))


class TestVotes:
    def test_encode(self):
        assert encode_vote(vote("positive")) == 1.0
        assert encode_vote(vote("negative")) == 0.0
        assert encode_vote(vote("neutral")) is None

    @pytest.mark.parametrize(
        "sims,expected",
        [
            ((0.9, 0.1, 0.2), "positive"),
            ((0.2, 0.9, 0.1), "negative"),
            ((0.1, 0.2, 0.9), "neutral"),
            ((0.0, 0.0, 0.0), "neutral"),  # full tie -> most conservative
            ((0.5, 0.5, 0.1), "negative"),  # pos/neg tie -> negative
            ((0.7, 0.2, 0.7), "neutral"),  # pos/neu tie -> neutral
        ],
    )
    def test_classify_vote_tie_rules(self, sims, expected):
        assert classify_vote(sims) == expected

    def test_crop_patch(self, rng):
        img = rng.uniform(0, 1, (10, 10, 3))
        grid = build_patch_grid((10, 10), 4)
        p = grid.patches[-1]
        np.testing.assert_array_equal(crop_patch(img, p), img[8:10, 8:10])


class TestArtifactScore:
    def test_direct_arithmetic(self):
        s = artifact_score([2, 1, 1], [vote("positive"), vote("negative"), vote("positive")], 0.5, "x")
        assert s.score == pytest.approx(0.75, abs=1e-15)
        assert s.retained
        assert s.counts == (2, 1, 0)

    def test_all_positive_upper_bound(self, rng):
        weights = rng.uniform(0.1, 5, 7)
        s = artifact_score(weights, [vote("positive")] * 7, 0.5)
        assert s.score == 1.0

    def test_matches_oracle_on_random_cases(self, rng):
        kinds = ["positive", "negative", "neutral"]
        for _ in range(50):
            n = int(rng.integers(1, 30))
            weights = rng.uniform(0, 2, n)
            votes = [vote(kinds[int(rng.integers(0, 3))]) for _ in range(n)]
            expected = weighted_mean_oracle(weights, votes)
            if expected is None:
                with pytest.raises(NoRelevantPatches):
                    artifact_score(weights, votes, 0.5)
            else:
                s = artifact_score(weights, votes, 0.5)
                assert s.score == pytest.approx(expected, abs=1e-12)
                assert s.retained == (s.score >= 0.5)

    def test_all_neutral_is_inapplicable(self):
        with pytest.raises(NoRelevantPatches):
            artifact_score([1, 1], [vote("neutral"), vote("neutral")], 0.5)

    def test_zero_weight_nonneutral_is_inapplicable(self):
        with pytest.raises(NoRelevantPatches):
            artifact_score([0.0, 0.0], [vote("positive"), vote("negative")], 0.5)

    def test_length_mismatch(self):
        with pytest.raises(ShapeMismatch):
            artifact_score([1.0], [vote("positive"), vote("negative")], 0.5)

    @given(seed=st.integers(0, 10_000), n=st.integers(1, 25))
    @settings(max_examples=80, deadline=None)
    def test_score_bounds_and_scale_invariance(self, seed, n):
        gen = np.random.default_rng(seed)
        weights = gen.uniform(0, 3, n)
        kinds = ["positive", "negative", "neutral"]
        votes = [vote(kinds[int(gen.integers(0, 3))]) for _ in range(n)]
        if weighted_mean_oracle(weights, votes) is None:
            return
        s = artifact_score(weights, votes, 0.5)
        assert 0.0 <= s.score <= 1.0
        c = float(gen.uniform(1e-3, 1e3))
        scaled = artifact_score(weights * c, votes, 0.5)
        assert scaled.score == pytest.approx(s.score, abs=1e-12)

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=60, deadline=None)
    def test_flipping_negative_to_positive_is_monotone(self, seed):
        gen = np.random.default_rng(seed)
        n = int(gen.integers(2, 15))
        weights = gen.uniform(0, 2, n)
        kinds = ["positive", "negative", "neutral"]
        votes = [vote(kinds[int(gen.integers(0, 3))]) for _ in range(n)]
        negatives = [i for i, v in enumerate(votes) if v.kind == "negative"]
        if not negatives or weighted_mean_oracle(weights, votes) is None:
            return
        base = artifact_score(weights, votes, 0.5).score
        flip = int(gen.choice(negatives))
        flipped_votes = list(votes)
        flipped_votes[flip] = vote("positive")
        flipped = artifact_score(weights, flipped_votes, 0.5).score
        assert flipped >= base - 1e-12

    def test_retained_matches_threshold(self):
        votes = [vote("positive"), vote("negative")]
        assert artifact_score([1, 1], votes, 0.5, "t").retained  # 0.5 >= 0.5
        assert not artifact_score([1, 1], votes, 0.6, "t").retained

    def test_artifact_score_type_roundtrip(self):
        s = ArtifactScore("name", 0.5, (1, 1, 0), True)
        assert s.artifact_name == "name"
