import numpy as np
import pytest
from sklearn.base import clone

from _oracles import (
    oracle_convolve,
    oracle_equalize,
    oracle_grayscale,
    oracle_normalize,
    oracle_preprocess,
    oracle_resize,
)
from leafrust.preprocessing import (
    DEFAULT_KERNEL,
    ImagePreprocessor,
    PreprocessConfig,
    PreprocessMethod,
    convolve2d,
    histogram_equalize,
    min_max_normalize,
    preprocess,
    preprocess_stages,
    resize,
    to_grayscale,
)

METHODS = ["edge-gray", "gray-only", "color-raw", "edge-equalize"]


def rgb(h, w, value):
    return np.full((h, w, 3), value, dtype=np.uint8)


def test_default_kernel_values():
    expected = np.array([[1, 0, -1], [2, 0, -2], [1, 0, -1]], dtype=np.float64)
    assert np.array_equal(DEFAULT_KERNEL, expected)


def test_grayscale_known_values():
    assert np.all(to_grayscale(rgb(4, 4, (255, 255, 255))) == 255)
    assert np.all(to_grayscale(rgb(4, 4, (0, 0, 0))) == 0)
    # 0.299 * 255 = 76.245, rounds down to 76
    assert np.all(to_grayscale(rgb(4, 4, (255, 0, 0))) == 76)


def test_grayscale_matches_reference():
    rng = np.random.default_rng(11)
    for _ in range(5):
        image = rng.integers(0, 256, (7, 9, 3), dtype=np.uint8)
        assert np.array_equal(to_grayscale(image), oracle_grayscale(image))


def test_grayscale_idempotent_within_rounding():
    rng = np.random.default_rng(12)
    gray = rng.integers(0, 256, (16, 16), dtype=np.uint8)
    replicated = np.repeat(gray[:, :, None], 3, axis=2)
    again = to_grayscale(replicated)
    assert np.max(np.abs(again.astype(int) - gray.astype(int))) <= 1


def test_grayscale_rejects_wrong_shape():
    with pytest.raises(ValueError):
        to_grayscale(np.zeros((4, 4), dtype=np.uint8))
    with pytest.raises(ValueError):
        to_grayscale(np.zeros((4, 4, 3), dtype=np.float32))


def test_convolve_vertical_step_response():
    image = np.array(
        [[0, 0, 255], [0, 0, 255], [0, 0, 255]], dtype=np.uint8
    )
    response = convolve2d(image, DEFAULT_KERNEL)
    # the step from dark to bright drives the center strongly negative
    assert response[1, 1] == -1020.0
    assert np.array_equal(response, oracle_convolve(image, DEFAULT_KERNEL))


def test_convolve_flat_interior_is_zero():
    image = rgb(6, 6, (90, 90, 90))[:, :, 0]
    response = convolve2d(image, DEFAULT_KERNEL)
    assert np.all(response[1:-1, 1:-1] == 0.0)


def test_convolve_bitwise_matches_reference():
    rng = np.random.default_rng(13)
    for _ in range(25):
        h = int(rng.integers(3, 13))
        w = int(rng.integers(3, 13))
        image = rng.integers(0, 256, (h, w), dtype=np.uint8)
        kernel = rng.uniform(-3.0, 3.0, (3, 3))
        mine = convolve2d(image, kernel)
        ref = oracle_convolve(image, kernel)
        assert mine.tobytes() == ref.tobytes()


def test_convolve_rejects_small_or_bad_inputs():
    with pytest.raises(ValueError):
        convolve2d(np.zeros((2, 5), dtype=np.uint8), DEFAULT_KERNEL)
    with pytest.raises(ValueError):
        convolve2d(np.zeros((5, 5), dtype=np.uint8), np.zeros((2, 2)))
    with pytest.raises(ValueError):
        convolve2d(np.zeros((5, 5), dtype=np.uint8), np.full((3, 3), np.nan))


def test_normalize_affine_example():
    response = np.array([[-1020.0, -510.0, 0.0]])
    # -510 sits exactly halfway, so it rounds up to 128
    assert np.array_equal(min_max_normalize(response), np.array([[0, 128, 255]]))


def test_normalize_constant_map_is_zero():
    assert np.all(min_max_normalize(np.full((4, 4), 3.25)) == 0)


def test_normalize_endpoints_and_order():
    rng = np.random.default_rng(14)
    for _ in range(10):
        response = rng.normal(0.0, 500.0, (6, 6))
        out = min_max_normalize(response)
        assert out.min() == 0 and out.max() == 255
        assert np.array_equal(out, oracle_normalize(response))
        # monotone: larger responses never map below smaller ones
        order = np.argsort(response.ravel())
        assert np.all(np.diff(out.ravel()[order].astype(int)) >= 0)


def test_normalize_rejects_nonfinite():
    with pytest.raises(ValueError):
        min_max_normalize(np.array([[0.0, np.inf]]))


def test_equalize_two_level_example():
    image = np.array([[10, 10], [20, 20]], dtype=np.uint8)
    assert np.array_equal(
        histogram_equalize(image), np.array([[0, 0], [255, 255]], dtype=np.uint8)
    )


def test_equalize_uniform_histogram_is_identity():
    image = np.arange(256, dtype=np.uint8).reshape(16, 16)
    assert np.array_equal(histogram_equalize(image), image)


def test_equalize_constant_maps_to_zero():
    assert np.all(histogram_equalize(np.full((5, 5), 99, dtype=np.uint8)) == 0)


def test_equalize_matches_reference_and_monotone():
    rng = np.random.default_rng(15)
    for _ in range(8):
        image = rng.integers(0, 256, (12, 12), dtype=np.uint8)
        out = histogram_equalize(image)
        assert np.array_equal(out, oracle_equalize(image))
        pairs = sorted(zip(image.ravel(), out.ravel()))
        values = [o for _, o in pairs]
        assert all(b >= a for a, b in zip(values, values[1:]))


def test_equalize_double_apply_drift_is_bounded():
    rng = np.random.default_rng(16)
    for _ in range(8):
        image = (rng.normal(120, 30, (16, 16))).clip(0, 255).astype(np.uint8)
        once = histogram_equalize(image)
        twice = histogram_equalize(once)
        hist = np.bincount(once.ravel(), minlength=256)
        cdf_min = int(np.cumsum(hist)[hist > 0][0])
        denom = max(1, once.size - cdf_min)
        bound = 255.0 * hist.max() / denom + 1.0
        drift = np.max(np.abs(twice.astype(int) - once.astype(int)))
        assert drift <= bound


def test_resize_box_average_example():
    image = np.array([[0, 100], [100, 200]], dtype=np.uint8)
    assert np.array_equal(resize(image, 1), np.array([[100]], dtype=np.uint8))


def test_resize_same_size_returns_copy():
    rng = np.random.default_rng(17)
    image = rng.integers(0, 256, (9, 9), dtype=np.uint8)
    out = resize(image, 9)
    assert np.array_equal(out, image)
    assert out is not image


def test_resize_constant_integer_factor():
    image = np.full((4, 4), 77, dtype=np.uint8)
    assert np.array_equal(resize(image, 2), np.full((2, 2), 77, dtype=np.uint8))


def test_resize_box_preserves_mean():
    rng = np.random.default_rng(18)
    for side, target in [(8, 4), (16, 8), (12, 3)]:
        image = rng.integers(0, 256, (side, side), dtype=np.uint8)
        out = resize(image, target)
        assert abs(float(image.mean()) - float(out.mean())) <= 1.0


def test_resize_upscale_keeps_range_and_corners():
    image = np.array([[0, 255], [0, 255]], dtype=np.uint8)
    out = resize(image, 6)
    assert out[0, 0] == 0 and out[0, -1] == 255
    for row in out.astype(int):
        assert np.all(np.diff(row) >= 0)


def test_resize_matches_reference():
    rng = np.random.default_rng(19)
    for shape, target in [((6, 6), 3), ((4, 4), 8), ((6, 4), 5), ((5, 5, 3), 3)]:
        image = rng.integers(0, 256, shape, dtype=np.uint8)
        mine = resize(image, target)
        ref = oracle_resize(image, target)
        assert np.max(np.abs(mine.astype(int) - ref.astype(int))) <= 1


def test_resize_rejects_bad_target():
    image = np.zeros((4, 4), dtype=np.uint8)
    for bad in [0, -2, 2.5, "big"]:
        with pytest.raises(ValueError):
            resize(image, bad)


def test_preprocess_output_shapes():
    rng = np.random.default_rng(20)
    image = rng.integers(0, 256, (24, 24, 3), dtype=np.uint8)
    for method in METHODS:
        config = PreprocessConfig(method=method, resolution=12)
        out = preprocess(image, config)
        if method == "color-raw":
            assert out.shape == (12, 12, 3)
        else:
            assert out.shape == (12, 12)
        assert out.dtype == np.uint8


def test_preprocess_native_resolution_matches_composed_reference():
    # with target == native size the final resize is the identity, so the
    # whole chain must agree with the reference exactly
    rng = np.random.default_rng(21)
    image = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    for method in METHODS:
        config = PreprocessConfig(method=method, resolution=16)
        mine = preprocess(image, config)
        ref = oracle_preprocess(image, method, 16, DEFAULT_KERNEL)
        assert np.array_equal(mine, ref), method


def test_preprocess_resampled_close_to_composed_reference():
    rng = np.random.default_rng(22)
    image = rng.integers(0, 256, (20, 20, 3), dtype=np.uint8)
    for method in METHODS:
        for target in (10, 40):
            config = PreprocessConfig(method=method, resolution=target)
            mine = preprocess(image, config)
            ref = oracle_preprocess(image, method, target, DEFAULT_KERNEL)
            assert np.max(np.abs(mine.astype(int) - ref.astype(int))) <= 1


def test_preprocess_stage_dump_names():
    rng = np.random.default_rng(23)
    image = rng.integers(0, 256, (16, 16, 3), dtype=np.uint8)
    names = [n for n, _ in preprocess_stages(image, PreprocessConfig(resolution=8))]
    assert names == ["input", "grayscale", "filtered", "resized"]
    config = PreprocessConfig(method="edge-equalize", resolution=8)
    names = [n for n, _ in preprocess_stages(image, config)]
    assert names == ["input", "grayscale", "filtered", "equalized", "resized"]


def test_preprocess_config_validation():
    with pytest.raises(ValueError):
        PreprocessConfig(method="sharpen")
    with pytest.raises(ValueError):
        PreprocessConfig(resolution=4)
    with pytest.raises(ValueError):
        PreprocessConfig(kernel=np.zeros((4, 4)))


def test_image_preprocessor_transform_stacks():
    rng = np.random.default_rng(24)
    images = [rng.integers(0, 256, (16, 16, 3), dtype=np.uint8) for _ in range(3)]
    prep = ImagePreprocessor(method="gray-only", resolution=8)
    out = prep.fit_transform(images)
    assert out.shape == (3, 8, 8)
    color = ImagePreprocessor(method="color-raw", resolution=8).transform(images)
    assert color.shape == (3, 8, 8, 3)
    empty = prep.transform([])
    assert empty.shape == (0, 8, 8)


def test_image_preprocessor_is_cloneable():
    prep = ImagePreprocessor(method="edge-equalize", resolution=32)
    params = prep.get_params()
    assert params["method"] == "edge-equalize"
    assert params["resolution"] == 32
    twin = clone(prep)
    assert twin.get_params()["method"] == "edge-equalize"


def test_image_preprocessor_rejects_unknown_method():
    with pytest.raises(ValueError):
        ImagePreprocessor(method="mystery").fit([])
