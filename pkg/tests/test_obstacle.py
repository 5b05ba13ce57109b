import colorsys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from navperception.obstacle import (
    HUE_INVALID,
    HistogramPair,
    RegionSpec,
    bin_index,
    build_reference_histograms,
    classify_pixels,
    detect_obstacles,
    gaussian5x5,
    median_filter,
    rgb_to_hsv,
)


def _direct_blur(image):
    """Reference 5x5 binomial blur by explicit neighbourhood sums."""
    k = np.array([1, 4, 6, 4, 1])
    kernel = np.outer(k, k)
    h, w = image.shape[:2]
    out = np.zeros(image.shape, dtype=np.int64)
    for i in range(h):
        for j in range(w):
            total = 0
            for a in range(-2, 3):
                for b in range(-2, 3):
                    ii = min(max(i + a, 0), h - 1)
                    jj = min(max(j + b, 0), w - 1)
                    total = total + kernel[a + 2, b + 2] * image[ii, jj].astype(np.int64)
            out[i, j] = np.floor(total / 256 + 0.5)
    return out


def _brute_majority(mask, k):
    h, w = mask.shape
    half = k // 2
    out = np.zeros_like(mask)
    for i in range(h):
        for j in range(w):
            ones = 0
            for a in range(i - half, i + half + 1):
                for b in range(j - half, j + half + 1):
                    if 0 <= a < h and 0 <= b < w:
                        ones += mask[a, b]
            out[i, j] = 1 if ones > k * k // 2 else 0
    return out


# -- gaussian ---------------------------------------------------------------

def test_gaussian_constant_fixed_point():
    image = np.full((8, 9, 3), 100, dtype=np.uint8)
    assert np.array_equal(gaussian5x5(image), image)


def test_gaussian_impulse_center_weight():
    image = np.zeros((5, 5, 3), dtype=np.uint8)
    image[2, 2] = 255
    blurred = gaussian5x5(image)
    assert blurred[2, 2].tolist() == [36, 36, 36]
    assert np.array_equal(blurred, _direct_blur(image))


def test_gaussian_matches_direct_convolution(rng):
    image = rng.integers(0, 256, (7, 11, 3), dtype=np.uint8)
    assert np.array_equal(gaussian5x5(image), _direct_blur(image))


def test_gaussian_too_small():
    with pytest.raises(ValueError):
        gaussian5x5(np.zeros((4, 4, 3), dtype=np.uint8))


# -- colour conversion ------------------------------------------------------

@pytest.mark.parametrize(
    "rgb, hsv",
    [((255, 0, 0), (0.0, 1.0, 1.0)), ((0, 255, 0), (1 / 3, 1.0, 1.0))],
)
def test_pure_primaries(rgb, hsv):
    out = rgb_to_hsv(np.array([[rgb]], dtype=np.uint8))[0, 0]
    assert out == pytest.approx(hsv)


def test_dark_pixel_gets_sentinel():
    h, s, v = rgb_to_hsv(np.array([[[10, 10, 10]]], dtype=np.uint8))[0, 0]
    assert v == pytest.approx(10 / 255)
    assert v <= 0.05
    assert h == HUE_INVALID


def test_hsv_matches_colorsys(rng):
    pixels = rng.integers(0, 256, (500, 3))
    hsv = rgb_to_hsv(pixels[None].astype(np.uint8))[0]
    for px, (h, s, v) in zip(pixels, hsv):
        rh, rs, rv = colorsys.rgb_to_hsv(*(px / 255))
        assert s == pytest.approx(rs, abs=1e-12)
        assert v == pytest.approx(rv, abs=1e-12)
        if rv <= 0.05 or rs <= 0.1:
            assert h == HUE_INVALID
        else:
            assert h == pytest.approx(rh, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.tuples(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255)),
       st.floats(0.05, 1.0))
def test_hue_survives_common_scaling(rgb, factor):
    # exact channel scaling before quantisation leaves hue unchanged
    base = np.array(rgb, dtype=np.float64)
    h0 = rgb_to_hsv(base[None, None])[0, 0, 0]
    h1 = rgb_to_hsv((base * factor)[None, None])[0, 0, 0]
    if h0 != HUE_INVALID and h1 != HUE_INVALID:
        assert h1 == pytest.approx(h0, abs=1e-9)


# -- bins -------------------------------------------------------------------

@pytest.mark.parametrize("x, expected", [(0.2, 1), (0.5, 3), (1.0, 5), (0.0, 1),
                                         (0.2001, 2), (0.8001, 5), (0.8, 4)])
def test_bin_index(x, expected):
    edges = [0, 0.2001, 0.4001, 0.6001, 0.8001]
    assert bin_index(x) == expected
    assert max(b for b, e in enumerate(edges, 1) if x >= e) == expected


def test_bin_index_rejects_sentinel():
    with pytest.raises(ValueError):
        bin_index(HUE_INVALID)


# -- histograms -------------------------------------------------------------

def _hsv_image(h, s, v, shape=(10, 10)):
    out = np.empty(shape + (3,))
    out[..., 0], out[..., 1], out[..., 2] = h, s, v
    return out


def test_histogram_sentinel_region():
    hsv = _hsv_image(HUE_INVALID, 0.0, 0.5)
    hist = build_reference_histograms(hsv, RegionSpec("rectangle", 0, 9, 0, 9))
    # raw value counts (0, 0, 100, 0, 0), 3-tap mean with 2-tap edges
    assert hist.val_bins.tolist() == pytest.approx([0, 100 / 3, 100 / 3, 100 / 3, 0])
    assert hist.hue_bins.tolist() == [0, 0, 0, 0, 0]
    assert hist.val_threshold == pytest.approx(100 / 3 / 50)
    assert hist.hue_threshold == 0


def test_histogram_valid_pixels_peak_bins():
    hsv = _hsv_image(0.1, 0.8, 0.9)
    hist = build_reference_histograms(hsv, RegionSpec("rectangle", 0, 9, 0, 9))
    assert hist.hue_bins.tolist() == pytest.approx([50, 100 / 3, 0, 0, 0])
    assert hist.val_bins.tolist() == pytest.approx([0, 0, 0, 100 / 3, 50])
    assert int(np.argmax(hist.hue_bins)) == 0
    assert hist.val_bins[4] == hist.val_bins.max()


def test_histogram_counts_valid_hues_only(rng):
    hsv = _hsv_image(0.3, 0.5, 0.5, (20, 20))
    hsv[:5, :, 0] = HUE_INVALID
    region = RegionSpec("rectangle", 0, 19, 0, 19)
    hist = build_reference_histograms(hsv, region)
    # 300 valid hues, all in bin 2; 400 values, all in bin 3
    assert hist.hue_bins.tolist() == pytest.approx([150, 100, 100, 0, 0])
    assert hist.val_bins.tolist() == pytest.approx([0, 400 / 3, 400 / 3, 400 / 3, 0])


def test_empty_region_rejected():
    hsv = _hsv_image(0.1, 0.5, 0.5)
    with pytest.raises(ValueError):
        RegionSpec("rectangle", 3, 2, 0, 1)
    with pytest.raises(ValueError):
        build_reference_histograms(hsv, RegionSpec("rectangle", 0, 20, 0, 5))


def test_histogram_is_order_free(rng):
    hsv = rgb_to_hsv(rng.integers(0, 256, (12, 12, 3), dtype=np.uint8))
    region = RegionSpec("rectangle", 0, 11, 0, 11)
    shuffled = hsv.reshape(-1, 3)[rng.permutation(144)].reshape(12, 12, 3)
    a = build_reference_histograms(hsv, region)
    b = build_reference_histograms(shuffled, region)
    assert np.array_equal(a.hue_bins, b.hue_bins)
    assert np.array_equal(a.val_bins, b.val_bins)


def test_trapezoid_region_widens():
    region = RegionSpec("trapezoid", 2, 4, 5, 6, widen=1)
    mask = region.mask(6, 12)
    assert mask.sum(axis=1).tolist() == [0, 0, 2, 4, 6, 0]
    assert mask[4, 3] and mask[4, 8] and not mask[4, 2]


def test_region_parse_round_trip():
    for text in ("rect:180,239,20,299", "trap:150,239,100,200,1"):
        assert str(RegionSpec.parse(text)) == text


# -- classification ---------------------------------------------------------

def _hist(hue, val):
    hue = np.asarray(hue, float)
    val = np.asarray(val, float)
    return HistogramPair(hue, val, hue.max() / 50, val.max() / 50)


def test_value_count_equal_to_threshold_is_ground():
    hist = HistogramPair(np.array([5.0, 0, 0, 0, 0]), np.array([0, 2.0, 100, 0, 0]),
                         0.0, 2.0)
    hsv = _hsv_image(HUE_INVALID, 0.0, 0.3, (1, 1))
    assert classify_pixels(hsv, hist)[0, 0] == 0


def test_floor_pixel_is_ground():
    hist = _hist([100, 10, 0, 0, 0], [0, 0, 30, 100, 30])
    hsv = _hsv_image(0.1, 0.5, 0.7, (1, 1))
    assert classify_pixels(hsv, hist)[0, 0] == 0


def test_hue_in_empty_bin_is_obstacle():
    hist = _hist([100, 10, 0, 0, 0], [0, 0, 30, 100, 30])
    hsv = _hsv_image(0.5, 0.5, 0.7, (1, 1))
    assert classify_pixels(hsv, hist)[0, 0] == 1


def test_sentinel_hue_judged_on_value_only():
    hist = _hist([100, 0, 0, 0, 0], [0, 0, 100, 0, 0])
    hsv = _hsv_image(HUE_INVALID, 0.0, 0.5, (1, 1))
    assert classify_pixels(hsv, hist)[0, 0] == 0


def test_label_depends_only_on_bins(rng):
    hsv = rgb_to_hsv(rng.integers(0, 256, (30, 30, 3), dtype=np.uint8))
    hist = build_reference_histograms(hsv, RegionSpec("rectangle", 20, 29, 0, 29))
    labels = classify_pixels(hsv, hist).ravel()
    flat = hsv.reshape(-1, 3)
    valid = flat[:, 0] != HUE_INVALID
    hue_key = np.where(valid, bin_index(np.where(valid, flat[:, 0], 0)), 0)
    keys = list(zip(hue_key, bin_index(flat[:, 2])))
    seen = {}
    for key, label in zip(keys, labels):
        assert seen.setdefault(key, label) == label


# -- median -----------------------------------------------------------------

def test_median_identity_k1(rng):
    mask = rng.integers(0, 2, (6, 7)).astype(np.uint8)
    assert np.array_equal(median_filter(mask, 1), mask)


def test_median_removes_isolated_pixel():
    mask = np.zeros((20, 20), dtype=np.uint8)
    mask[10, 10] = 1
    assert median_filter(mask, 9).sum() == 0


def test_median_keeps_block_interior():
    mask = np.zeros((40, 40), dtype=np.uint8)
    mask[10:30, 10:30] = 1
    out = median_filter(mask, 9)
    assert np.array_equal(out, _brute_majority(mask, 9))
    assert out[14:26, 14:26].all()


@settings(max_examples=25, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 12), st.integers(1, 12)),
              elements=st.integers(0, 1)),
       st.sampled_from([1, 3, 5]))
def test_median_matches_brute_force(mask, k):
    assert np.array_equal(median_filter(mask, k), _brute_majority(mask, k))


def test_median_even_window_rejected():
    with pytest.raises(ValueError):
        median_filter(np.zeros((5, 5)), 4)


# -- full detector ----------------------------------------------------------

def test_uniform_ground_has_no_obstacles():
    image = np.full((240, 320, 3), (90, 70, 50), dtype=np.uint8)
    assert detect_obstacles(image).sum() == 0


def test_patch_detected():
    image = np.full((240, 320, 3), 60, dtype=np.uint8)
    image[60:100, 140:180] = (200, 40, 40)
    mask = detect_obstacles(image)
    truth = np.zeros((240, 320), dtype=np.uint8)
    truth[60:100, 140:180] = 1
    assert mask[64:96, 144:176].all()
    outside = np.ones_like(truth, dtype=bool)
    outside[56:104, 136:184] = False
    assert mask[outside].sum() == 0


def test_shadow_in_reference_is_ground():
    floor = np.array([150, 110, 70])
    image = np.tile(floor, (240, 320, 1)).astype(np.uint8)
    shadow = (floor // 2).astype(np.uint8)
    # reference area holds both lit and shadowed floor
    image[200:240, 20:160] = shadow
    image[60:120, 100:220] = shadow
    assert detect_obstacles(image)[60:120, 100:220].sum() == 0
