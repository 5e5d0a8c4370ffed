import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from weatherclf import features as F
from weatherclf import imaging
from weatherclf.errors import DimensionError, ParameterError

from conftest import horizontal_step, rgb_const, vertical_step
from oracles import LAPLACE, SOBEL_X, conv_slices, features_oracle, lbp_naive, pop_moments

rgb_images = arrays(
    np.uint8,
    st.tuples(st.integers(7, 14), st.integers(7, 14), st.just(3)),
    elements=st.integers(0, 255),
)


def test_schema():
    assert F.N_FEATURES == 20
    assert len(set(F.FEATURE_NAMES)) == 20
    assert F.FEATURE_NAMES[0] == "brightness" and F.FEATURE_NAMES[-1] == "color_var_r"
    assert F.SCHEMA_VERSION == 1


class TestScalarFeatures:
    def test_brightness(self):
        assert F.brightness(np.full((4, 4), 128, np.uint8)) == 128.0
        assert F.brightness(np.array([[0, 255]], np.uint8)) == 127.5
        _, v = imaging.saturation_value(rgb_const((255, 0, 0)))
        assert F.brightness(v) == 255.0

    def test_saturation(self):
        _, s, _ = imaging.to_hsv(rgb_const((90, 90, 90)))
        assert F.saturation(s) == 0.0
        _, s, _ = imaging.to_hsv(rgb_const((255, 0, 0)))
        assert F.saturation(s) == 255.0
        img = np.full((8, 8, 3), 100, np.uint8)
        img[:, :4] = (255, 0, 0)
        assert F.saturation(imaging.saturation_value(img)[0]) == 127.5

    def test_noise_constant_and_ramp(self):
        assert F.noise_level(np.full((9, 9), 40, np.uint8)) == 0.0
        ramp = np.tile((np.arange(12) * 20).astype(np.uint8), (10, 1))
        expected = pop_moments(conv_slices(ramp, LAPLACE))[1]
        assert expected > 0
        assert F.noise_level(ramp) == pytest.approx(expected, rel=1e-12)

    def test_noise_checkerboard(self):
        yy, xx = np.mgrid[0:8, 0:8]
        board = (((yy + xx) % 2) * 255).astype(np.uint8)
        lap = conv_slices(board, LAPLACE)
        assert lap[3, 3] in (1020.0, -1020.0)  # interior stencil is +/-4*255
        expected = pop_moments(lap)[1]
        assert F.noise_level(board) == pytest.approx(expected, rel=1e-12)
        assert F.blur_metric(board) == F.noise_level(board)

    def test_edge_strength(self):
        assert F.edge_strength_x(np.full((8, 8), 3, np.uint8)) == 0.0
        assert F.edge_strength_x(horizontal_step()) == 0.0
        step = vertical_step()
        expected = np.mean(np.abs(conv_slices(step, SOBEL_X)))
        assert expected == 255.0  # two of eight columns at |1020|
        assert F.edge_strength_x(step) == pytest.approx(expected)

    def test_motion_blur(self):
        assert F.motion_blur_x(np.full((8, 8), 3, np.uint8)) == 0.0
        step = vertical_step()
        assert F.motion_blur_x(step) == pytest.approx(pop_moments(conv_slices(step, SOBEL_X))[1])

    def test_motion_blur_drops_after_horizontal_blur(self, rng):
        g = rng.integers(0, 256, (32, 32)).astype(np.uint8)
        k = np.zeros((9, 9))
        k[4, :] = 1.0 / 9
        blurred = np.floor(conv_slices(g, k) + 0.5).astype(np.uint8)
        assert F.motion_blur_x(blurred) < F.motion_blur_x(g)
        oracle_raw = pop_moments(conv_slices(g, SOBEL_X))[1]
        oracle_blur = pop_moments(conv_slices(blurred, SOBEL_X))[1]
        assert oracle_blur < oracle_raw


class TestLbp:
    def test_constant(self):
        for r in F.LBP_RADII:
            codes = F.lbp_map(np.full((9, 9), 77, np.uint8), r)
            assert codes.shape == (9 - 2 * r, 9 - 2 * r)
            assert np.all(codes == 255)
            assert F.lbp_stats(np.full((9, 9), 77, np.uint8), r) == (255.0, 0.0)

    def test_spike(self):
        g = np.zeros((5, 5), np.uint8)
        g[2, 2] = 255
        codes = F.lbp_map(g, 1)  # interior 3x3, centre at (1, 1)
        assert codes[1, 1] == 0
        # black neighbours compare every sample against 0, so ">=" sets all bits
        for y, x in ((0, 1), (2, 1), (1, 0), (1, 2)):
            assert codes[y, x] == 255
        assert np.array_equal(codes, lbp_naive(g, 1))

    def test_vertical_step_columns_constant(self):
        codes = F.lbp_map(vertical_step(10, 12), 1)
        assert np.all(codes == codes[0:1, :])
        assert np.array_equal(codes, lbp_naive(vertical_step(10, 12), 1))

    @pytest.mark.parametrize("radius", [1, 2, 3])
    def test_matches_oracle(self, rng, radius):
        g = rng.integers(0, 256, (16, 16)).astype(np.uint8)
        assert np.array_equal(F.lbp_map(g, radius), lbp_naive(g, radius))
        mean, var = F.lbp_stats(g, radius)
        m_ref, v_ref = pop_moments(lbp_naive(g, radius))
        assert mean == pytest.approx(m_ref, rel=1e-12) and var == pytest.approx(v_ref, rel=1e-12)

    def test_two_code_moments(self):
        assert F._moments(np.array([0] * 8 + [255] * 8)) == (127.5, 16256.25)

    def test_errors(self):
        with pytest.raises(DimensionError):
            F.lbp_map(np.zeros((6, 6), np.uint8), 3)
        with pytest.raises(ParameterError):
            F.lbp_map(np.zeros((6, 6), np.uint8), 0)

    @settings(max_examples=30, deadline=None)
    @given(g=arrays(np.uint8, (9, 9), elements=st.integers(0, 255)), r=st.sampled_from([1, 2, 3]))
    def test_bounds(self, g, r):
        codes = F.lbp_map(g, r)
        assert codes.min() >= 0 and codes.max() <= 255
        mean, var = F.lbp_stats(g, r)
        assert 0 <= mean <= 255 and var >= 0


class TestEdgeAndColor:
    def test_edge_stats(self):
        assert F.edge_stats(np.zeros((4, 4))) == (0.0, 0.0)
        assert F.edge_stats(np.full((4, 4), 255)) == (255.0, 0.0)
        e = np.zeros((4, 4))
        e[0] = 255
        assert F.edge_stats(e) == (63.75, 12192.1875)

    def test_color_intensity(self):
        assert F.color_stats(np.full((5, 5), 100, np.uint8)) == (100.0, 0.0)
        half = np.zeros((4, 4), np.uint8)
        half[:2] = 200
        assert F.color_stats(half) == (100.0, 10000.0)

    def test_color_literal(self):
        plane = np.full((8, 8), 100, np.uint8)
        mean, var = F.color_stats(plane, "literal")
        assert mean == 64 / 256
        counts = np.zeros(256)
        counts[100] = 64
        assert var == pytest.approx(np.mean((counts - counts.mean()) ** 2))

    def test_color_bad_mode(self):
        with pytest.raises(ParameterError):
            F.color_stats(np.zeros((3, 3), np.uint8), "other")
        with pytest.raises(ParameterError):
            F.ExtractionConfig(color_mode="other")


class TestExtract:
    def test_constant_mid_gray(self):
        vec = F.extract_features(rgb_const((128, 128, 128), 16, 16))
        expected = [128, 0, 0, 0, 0, 0, 255, 0, 255, 0, 255, 0, 0, 0, 128, 0, 128, 0, 128, 0]
        assert vec.tolist() == expected

    def test_matches_oracle(self, rng):
        for _ in range(20):
            img = rng.integers(0, 256, (32, 32, 3)).astype(np.uint8)
            edges = imaging.canny(imaging.to_grayscale(img))
            np.testing.assert_allclose(F.extract_features(img), features_oracle(img, edges), rtol=1e-9, atol=1e-9)

    def test_channel_order_bgr(self):
        vec = F.extract_features(rgb_const((10, 20, 30), 8, 8))
        assert vec[14] == 30 and vec[16] == 20 and vec[18] == 10

    def test_too_small(self):
        with pytest.raises(DimensionError, match="lbp_mean_r3"):
            F.extract_features(rgb_const((1, 2, 3), 6, 9))
        F.extract_features(rgb_const((1, 2, 3), 7, 7))

    def test_deterministic(self, rng):
        img = rng.integers(0, 256, (20, 24, 3)).astype(np.uint8)
        assert F.extract_features(img).tobytes() == F.extract_features(img.copy()).tobytes()

    def test_literal_mode_changes_only_color(self, rng):
        img = rng.integers(0, 256, (16, 16, 3)).astype(np.uint8)
        a = F.extract_features(img)
        b = F.extract_features(img, F.ExtractionConfig(color_mode="literal"))
        assert np.array_equal(a[:14], b[:14])
        assert np.all(b[[14, 16, 18]] == 256 / 256)

    @settings(max_examples=40, deadline=None)
    @given(img=rgb_images, seed=st.integers(0, 2**32 - 1))
    def test_permutation_invariance(self, img, seed):
        h, w = img.shape[:2]
        perm = np.random.default_rng(seed).permutation(h * w)
        shuffled = img.reshape(-1, 3)[perm].reshape(h, w, 3)
        a, b = F.extract_features(img), F.extract_features(shuffled)
        idx = [0, 1, 14, 15, 16, 17, 18, 19]
        assert np.array_equal(a[idx], b[idx])

    @settings(max_examples=40, deadline=None)
    @given(img=rgb_images)
    def test_finite_and_duplicate_slots(self, img):
        vec = F.extract_features(img)
        assert vec.shape == (20,)
        assert np.all(np.isfinite(vec))
        assert vec[2] == vec[3]
