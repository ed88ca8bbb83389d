"""Metrics: pixel accuracy with its tolerance band and the Fréchet
embedding distance, cross-checked against a scipy-based oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyptych.errors import DimensionError
from polyptych.evaluation import (
    PIX_ACC_TOL,
    embed_set,
    evaluate_sets,
    frechet_feature_distance,
    frechet_from_embeddings,
    pix_acc,
)
from oracles import frechet_oracle


def _image_set(n, size=16, seed=0):
    rng = np.random.default_rng(seed)
    return [rng.random((3, size, size)).astype(np.float32) for _ in range(n)]


class TestPixAcc:
    def test_identity_is_one(self):
        rng = np.random.default_rng(1)
        img = rng.random((3, 9, 7))
        assert pix_acc(img, img) == 1.0

    def test_tolerance_is_inclusive(self):
        a = np.zeros((3, 4, 4))
        b = np.zeros((3, 4, 4))
        b[0, 0, 0] = 16.0 / 255.0  # exactly at the band edge: still correct
        assert pix_acc(a, b) == 1.0
        b[0, 0, 0] = 16.5 / 255.0
        assert pix_acc(a, b) == pytest.approx(15.0 / 16.0)

    def test_default_tolerance_value(self):
        assert PIX_ACC_TOL == pytest.approx(16.0 / 255.0)

    def test_deviation_is_max_over_channels(self):
        a = np.zeros((3, 2, 2))
        b = np.zeros((3, 2, 2))
        # One pixel deviates in all three channels: counted once, not thrice.
        b[:, 0, 0] = 0.5
        assert pix_acc(a, b) == pytest.approx(3.0 / 4.0)

    def test_counts_fraction(self):
        a = np.zeros((3, 5, 5))
        b = np.zeros((3, 5, 5))
        flat = b.reshape(3, -1)
        flat[1, :7] = 0.9
        assert pix_acc(a, b) == pytest.approx(1.0 - 7.0 / 25.0)

    def test_custom_tolerance(self):
        a = np.zeros((3, 2, 2))
        b = np.full((3, 2, 2), 0.3)
        assert pix_acc(a, b, tol=0.31) == 1.0
        assert pix_acc(a, b, tol=0.29) == 0.0

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            pix_acc(np.zeros((3, 4, 4)), np.zeros((3, 4, 5)))

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_bounded_and_symmetric(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.random((3, 6, 6))
        b = rng.random((3, 6, 6))
        acc = pix_acc(a, b)
        assert 0.0 <= acc <= 1.0
        assert acc == pix_acc(b, a)


class TestFrechetEmbeddings:
    def test_self_distance_negligible(self):
        rng = np.random.default_rng(3)
        emb = rng.standard_normal((40, 8))
        assert abs(frechet_from_embeddings(emb, emb)) <= 1e-8

    def test_pure_mean_shift_equals_squared_norm(self):
        # Equal covariances make the trace terms cancel; only ||dmu||^2 stays.
        rng = np.random.default_rng(4)
        a = rng.standard_normal((200, 8))
        delta = rng.standard_normal(8)
        b = a + delta
        want = float(delta @ delta)
        got = frechet_from_embeddings(a, b)
        assert got == pytest.approx(want, rel=0.02)

    @pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
    def test_matches_scipy_oracle(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((50, 6))
        b = 0.5 * rng.standard_normal((60, 6)) + rng.standard_normal(6)
        got = frechet_from_embeddings(a, b)
        want = frechet_oracle(a, b)
        assert got == pytest.approx(want, rel=1e-6, abs=1e-8)

    def test_symmetric(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((30, 5))
        b = rng.standard_normal((30, 5)) * 2.0
        assert frechet_from_embeddings(a, b) == pytest.approx(
            frechet_from_embeddings(b, a), rel=1e-9, abs=1e-9
        )

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=20, deadline=None)
    def test_never_meaningfully_negative(self, seed):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((20, 4))
        b = rng.standard_normal((25, 4))
        assert frechet_from_embeddings(a, b) >= -1e-8

    def test_rejects_bad_shapes(self):
        with pytest.raises(DimensionError):
            frechet_from_embeddings(np.zeros(5), np.zeros(5))
        with pytest.raises(DimensionError):
            frechet_from_embeddings(np.zeros((5, 3)), np.zeros((5, 4)))
        with pytest.raises(DimensionError):
            frechet_from_embeddings(np.zeros((1, 3)), np.zeros((5, 3)))


class TestFeatureDistance:
    def test_embed_set_shape(self, extractor):
        emb = embed_set(_image_set(3), extractor)
        assert emb.shape == (3, 64)
        assert np.all(np.isfinite(emb))

    def test_embed_set_deterministic(self, extractor):
        imgs = _image_set(2, seed=5)
        np.testing.assert_array_equal(
            embed_set(imgs, extractor), embed_set(imgs, extractor)
        )

    def test_requires_full_rank_sample_count(self, extractor):
        imgs = _image_set(10)
        with pytest.raises(DimensionError, match="65"):
            frechet_feature_distance(imgs, imgs, extractor)

    def test_identity_on_image_sets(self, extractor):
        imgs = _image_set(65, seed=11)
        assert abs(frechet_feature_distance(imgs, imgs, extractor)) <= 1e-8

    def test_separates_distinct_sets(self, extractor):
        bright = _image_set(65, seed=1)
        dark = [img * 0.2 for img in _image_set(65, seed=2)]
        d_cross = frechet_feature_distance(bright, dark, extractor)
        d_self = abs(frechet_feature_distance(bright, bright, extractor))
        assert d_cross > 100 * max(d_self, 1e-12)


class TestEvaluateSets:
    def test_report_fields(self, extractor):
        imgs = _image_set(65, seed=3)
        report = evaluate_sets(imgs, imgs, extractor)
        d = report.to_dict()
        assert set(d) == {"pix_acc", "frechet", "sample_counts",
                          "inception_score", "lpips"}
        assert d["pix_acc"] == 1.0
        assert abs(d["frechet"]) <= 1e-8
        assert d["sample_counts"] == {"real": 65, "fake": 65}
        assert d["inception_score"] is None
        assert d["lpips"] is None

    def test_unpaired_skips_pix_acc(self, extractor):
        real = _image_set(65, seed=6)
        fake = _image_set(66, seed=7)
        report = evaluate_sets(real, fake, extractor, paired=False)
        assert report.pix_acc is None
        assert report.frechet is not None

    def test_paired_count_mismatch(self, extractor):
        with pytest.raises(DimensionError, match="equal counts"):
            evaluate_sets(_image_set(3), _image_set(4), extractor)
