import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from probelight import (
    ColorSpace,
    RasterImage,
    ToneMapParams,
    apply_tonemap,
    linearize,
    luminance,
    merge_brackets,
    tonemap,
    tonemap_scale,
)
from probelight.errors import (
    DimensionMismatch,
    EvOrderError,
    LengthMismatch,
    SpaceMismatch,
)
from probelight.radiometry import LUMA_COEFFS

from helpers import gray_image, rand_ldr
from oracles import ref_merge


class TestLuminance:
    def test_luma_coefficients_sum_to_one(self):
        assert abs(float(LUMA_COEFFS.sum()) - 1.0) < 1e-12

    def test_half_gray_at_ev0(self):
        lum = luminance(gray_image(0.5), ev=0.0)
        assert lum.space is ColorSpace.LINEAR_LUMINANCE
        assert np.allclose(lum.data, 0.5**2.4, atol=1e-7)

    def test_half_gray_at_ev_minus_2_5(self):
        lum = luminance(gray_image(0.5), ev=-2.5)
        assert np.allclose(lum.data, 0.5**2.4 * 2.0**2.5, atol=1e-6)

    def test_ev_shift_is_exact_power_of_two(self):
        img = rand_ldr(np.random.default_rng(0), 8, 8)
        base = luminance(img, ev=0.0).data
        shifted = luminance(img, ev=-3.0).data
        assert np.array_equal(shifted, base * np.float32(8.0))

    def test_rejects_single_channel(self):
        with pytest.raises(SpaceMismatch):
            luminance(gray_image(0.5, channels=1), ev=0.0)


class TestMergeBrackets:
    def test_single_bracket_is_linearize(self):
        img = rand_ldr(np.random.default_rng(3), 6, 4)
        merged = merge_brackets([img], [0.0])
        assert np.allclose(merged.data, linearize(img).data, atol=1e-7)
        assert merged.space is ColorSpace.LINEAR_HDR

    def test_unsaturated_pair_keeps_ev0_luminance(self):
        merged = merge_brackets([gray_image(0.5), gray_image(0.2)], [0.0, -2.5])
        assert np.allclose(merged.data, 0.5**2.4, atol=1e-6)

    def test_saturated_pair_recovers_darker_bracket(self):
        merged = merge_brackets([gray_image(1.0), gray_image(0.5)], [0.0, -2.5])
        assert np.allclose(merged.data, 0.5**2.4 * 2.0**2.5, atol=1e-6)

    def test_matches_scalar_trace_on_random_triples(self):
        rng = np.random.default_rng(42)
        for _ in range(10):
            imgs = [rand_ldr(rng, 4, 4) for _ in range(3)]
            merged = merge_brackets(imgs, [0.0, -2.5, -5.0])
            expected = ref_merge([im.data for im in imgs], [0.0, -2.5, -5.0])
            assert np.allclose(merged.data, expected.astype(np.float32), atol=1e-6)

    def test_black_ev0_pixels_stay_black(self):
        merged = merge_brackets([gray_image(0.0), gray_image(0.5)], [0.0, -2.5])
        assert np.all(merged.data == 0.0)

    def test_scale_consistency_below_saturation(self):
        # every EV0 pixel below the 0.9 luminance knee takes EV0's luminance
        rng = np.random.default_rng(7)
        bright = RasterImage(
            (rng.random((5, 5, 3)) * 0.94).astype(np.float32), ColorSpace.LDR_SRGB
        )
        dark = rand_ldr(rng, 5, 5)
        merged = merge_brackets([bright, dark], [0.0, -2.5])
        assert np.allclose(merged.data, linearize(bright).data, atol=1e-6)

    def test_chroma_comes_from_ev0(self):
        # output must be a per-pixel non-negative multiple of linearize(I0)
        rng = np.random.default_rng(8)
        imgs = [rand_ldr(rng, 6, 6) for _ in range(3)]
        merged = merge_brackets(imgs, [0.0, -2.5, -5.0]).data.astype(np.float64)
        base = linearize(imgs[0]).data.astype(np.float64)
        cross = np.cross(merged, base)
        norm = np.linalg.norm(merged, axis=-1) * np.linalg.norm(base, axis=-1)
        assert np.all(np.linalg.norm(cross, axis=-1) <= 1e-6 * np.maximum(norm, 1e-12))

    def test_errors(self):
        img = gray_image(0.5)
        with pytest.raises(LengthMismatch):
            merge_brackets([], [])
        with pytest.raises(LengthMismatch):
            merge_brackets([img], [0.0, -1.0])
        with pytest.raises(EvOrderError):
            merge_brackets([img, img], [-1.0, -2.0])
        with pytest.raises(EvOrderError):
            merge_brackets([img, img], [0.0, 0.0])
        with pytest.raises(EvOrderError):
            merge_brackets([img, img], [0.0, np.nan])
        with pytest.raises(DimensionMismatch):
            merge_brackets([img, gray_image(0.5, width=5)], [0.0, -1.0])
        with pytest.raises(SpaceMismatch):
            merge_brackets([gray_image(0.5, space=ColorSpace.LINEAR_HDR)], [0.0])


class TestToneMap:
    def test_constant_image_maps_to_target(self):
        out = tonemap(gray_image(3.7, space=ColorSpace.LINEAR_HDR))
        assert np.allclose(out.data, 0.9, atol=1e-6)

    def test_all_zero_maps_to_zero(self):
        out = tonemap(gray_image(0.0, space=ColorSpace.LINEAR_HDR))
        assert np.all(out.data == 0.0)

    def test_percentile_pixel_hits_target_and_brighter_clips(self):
        # 201 samples, P99 lands exactly on sorted index 198 (value 4)
        vals = np.zeros(201, dtype=np.float32)
        vals[197:] = [2.0, 4.0, 6.0, 8.0]
        img = RasterImage(vals.reshape(1, 201, 1), ColorSpace.LINEAR_HDR)
        out = tonemap(img).data.ravel()
        assert abs(out[198] - 0.9) < 1e-6
        assert out[200] == 1.0  # 0.9 * 2^(1/2.4) ~ 1.2014, clipped
        assert abs(out[197] - 0.9 * 0.5 ** (1.0 / 2.4)) < 1e-6

    def test_global_scale_invariance(self):
        rng = np.random.default_rng(5)
        hdr = RasterImage((rng.random((8, 8, 3)) * 20).astype(np.float32), ColorSpace.LINEAR_HDR)
        scaled = RasterImage(hdr.data * np.float32(37.0), ColorSpace.LINEAR_HDR)
        assert np.allclose(tonemap(hdr).data, tonemap(scaled).data, atol=1e-6)

    def test_scale_zero_for_black_image(self):
        assert tonemap_scale(gray_image(0.0, space=ColorSpace.LINEAR_HDR)) == 0.0

    def test_apply_tonemap_rejects_ldr_input(self):
        with pytest.raises(SpaceMismatch):
            apply_tonemap(gray_image(0.5), 1.0)

    def test_custom_params(self):
        img = gray_image(2.0, space=ColorSpace.LINEAR_HDR)
        out = tonemap(img, ToneMapParams(gamma=2.0, percentile=50.0, target=0.5))
        assert np.allclose(out.data, 0.5, atol=1e-6)


class TestLinearize:
    def test_fixed_points_and_half(self):
        img = RasterImage(
            np.array([[[0.0], [0.5], [1.0]]], dtype=np.float32), ColorSpace.LDR_SRGB
        )
        out = linearize(img).data.ravel()
        assert out[0] == 0.0
        assert out[2] == 1.0
        assert abs(out[1] - 0.5**2.4) < 1e-7

    def test_strictly_monotone(self):
        vals = np.linspace(0.01, 1.0, 64, dtype=np.float32).reshape(1, 64, 1)
        out = linearize(RasterImage(vals, ColorSpace.LDR_SRGB)).data.ravel()
        assert np.all(np.diff(out) > 0)

    def test_rejects_linear_input(self):
        with pytest.raises(SpaceMismatch):
            linearize(gray_image(0.5, space=ColorSpace.LINEAR_HDR))

    def test_inverts_unclipped_tonemap(self):
        rng = np.random.default_rng(9)
        hdr = RasterImage((rng.random((6, 6, 3)) * 0.5 + 0.1).astype(np.float32),
                          ColorSpace.LINEAR_HDR)
        scale = 0.9  # keeps every sample below 1 after the 1/gamma power
        ldr = apply_tonemap(hdr, scale)
        back = linearize(ldr).data
        assert np.allclose(back, scale * hdr.data, rtol=1e-5, atol=1e-7)


@given(st.integers(min_value=0, max_value=2**32 - 1))
def test_merge_output_always_finite_nonnegative(seed):
    rng = np.random.default_rng(seed)
    imgs = [rand_ldr(rng, 3, 3) for _ in range(3)]
    merged = merge_brackets(imgs, [0.0, -2.5, -5.0])
    assert np.all(np.isfinite(merged.data))
    assert np.all(merged.data >= 0.0)
