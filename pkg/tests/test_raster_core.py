import numpy as np
import pytest
from PIL import Image

from errors import ImageFormatError, ParameterError
from raster_core import (
    StructuringElement, as_raster, black_top_hat, gaussian_blur, gaussian_kernel, gradient_field,
    grey_closing, load_image, load_mask, max_normalize, minmax_normalize, save_image,
)


class TestLoadImage:

    def test_pgm_scaled_to_unit_interval(self, tmp_path):
        path = tmp_path / "tiny.pgm"
        Image.fromarray(np.array([[0, 255], [128, 64]], dtype=np.uint8), mode="L").save(path)
        np.testing.assert_allclose(load_image(path), [[0.0, 1.0], [128 / 255, 64 / 255]])

    def test_rgb_reduced_to_luma(self, tmp_path):
        path = tmp_path / "rgb.png"
        pixels = np.array([[[255, 255, 255], [255, 0, 0]]], dtype=np.uint8)
        Image.fromarray(pixels, mode="RGB").save(path)
        np.testing.assert_allclose(load_image(path), [[1.0, 0.299]], atol=1e-12)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_image(tmp_path / "nope.png")

    def test_unsupported_mode(self, tmp_path):
        path = tmp_path / "deep.png"
        Image.fromarray(np.zeros((4, 4), dtype=np.int32), mode="I").save(path)
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_garbage_file(self, tmp_path):
        path = tmp_path / "junk.png"
        path.write_bytes(b"definitely not an image")
        with pytest.raises(ImageFormatError):
            load_image(path)

    def test_pgm_round_trip_is_bit_stable(self, tmp_path, rng):
        img = rng.integers(0, 256, size=(7, 9)) / 255.0
        path = save_image(img, tmp_path / "out.pgm")
        np.testing.assert_array_equal(load_image(path), img)

    def test_mask_threshold(self, tmp_path):
        path = tmp_path / "mask.pgm"
        Image.fromarray(np.array([[0, 127, 128, 255]], dtype=np.uint8), mode="L").save(path)
        np.testing.assert_array_equal(load_mask(path), [[0.0, 0.0, 1.0, 1.0]])

    def test_save_rejects_other_suffix(self, tmp_path):
        with pytest.raises(ImageFormatError):
            save_image(np.zeros((2, 2)), tmp_path / "out.jpg")


class TestAsRaster:

    @pytest.mark.parametrize("values", [np.zeros(3), np.zeros((0, 4)), [[1.0, np.nan]]])
    def test_rejects_invalid(self, values):
        with pytest.raises(ParameterError):
            as_raster(values)


class TestGaussianBlur:

    def test_constant_image_unchanged(self):
        img = np.full((6, 8), 0.37)
        np.testing.assert_allclose(gaussian_blur(img, 5, 0.5), img, rtol=0, atol=1e-15)

    def test_impulse_gives_sampled_taps(self):
        img = np.zeros((3, 3))
        img[1, 1] = 1.0
        taps = np.exp(-np.array([1.0, 0.0, 1.0]) / (2 * 0.25))
        taps /= taps.sum()
        np.testing.assert_allclose(gaussian_blur(img, 3, 0.5), np.outer(taps, taps), atol=1e-15)

    def test_single_pixel_image(self):
        np.testing.assert_allclose(gaussian_blur([[0.6]], 5, 2.0), [[0.6]])

    def test_kernel_sums_to_one(self):
        assert gaussian_kernel(7, 1.3).sum() == pytest.approx(1.0)

    @pytest.mark.parametrize("side, sigma", [(4, 0.5), (0, 0.5), (3, 0.0)])
    def test_invalid_kernel(self, side, sigma):
        with pytest.raises(ParameterError):
            gaussian_blur(np.zeros((4, 4)), side, sigma)


class TestGradientField:

    def test_horizontal_ramp(self):
        img = np.tile(np.arange(10) / 10.0, (8, 1))
        grad = gradient_field(img)
        np.testing.assert_allclose(grad.magnitude[1:-1, 1:-1], 1.0)
        np.testing.assert_allclose(grad.orientation[1:-1, 1:-1], 0.0)

    def test_vertical_ramp(self):
        img = np.tile((np.arange(8) / 8.0)[:, None], (1, 10))
        grad = gradient_field(img)
        np.testing.assert_allclose(grad.orientation[1:-1, 1:-1], np.pi / 2)

    def test_constant_image(self):
        grad = gradient_field(np.full((5, 5), 0.4))
        assert np.all(grad.magnitude == 0)
        assert np.all(grad.orientation == 0)

    def test_ranges(self, rng):
        grad = gradient_field(rng.random((20, 30)))
        assert grad.shape == (20, 30)
        assert grad.magnitude.min() >= 0 and grad.magnitude.max() == pytest.approx(1.0)
        assert np.all((grad.orientation >= 0) & (grad.orientation < 2 * np.pi))

    def test_degenerate_dimension(self):
        with pytest.raises(ParameterError):
            gradient_field(np.zeros((1, 10)))


def _brute_force_closing(img, side):
    r = side // 2
    padded = np.pad(img, r, mode="edge")
    dilated = np.array([[padded[y:y + side, x:x + side].max() for x in range(img.shape[1])]
                        for y in range(img.shape[0])])
    padded = np.pad(dilated, r, mode="edge")
    return np.array([[padded[y:y + side, x:x + side].min() for x in range(img.shape[1])]
                     for y in range(img.shape[0])])


class TestMorphology:

    def test_even_structuring_element(self):
        with pytest.raises(ParameterError):
            StructuringElement(50)

    def test_constant_image_has_no_top_hat(self):
        assert np.all(black_top_hat(np.full((9, 9), 0.5), StructuringElement(3)) == 0)

    def test_dark_pixel_depth(self):
        img = np.full((9, 9), 0.8)
        img[4, 4] = 0.3
        hat = black_top_hat(img, StructuringElement(3))
        assert hat[4, 4] == pytest.approx(0.5)
        hat[4, 4] = 0.0
        assert np.all(hat == 0)

    def test_matches_brute_force_closing(self, rng):
        img = rng.random((9, 9))
        np.testing.assert_array_equal(grey_closing(img, StructuringElement(3)), _brute_force_closing(img, 3))

    def test_non_negative_and_zero_on_closed(self, rng):
        img = rng.random((16, 16))
        se = StructuringElement(5)
        assert np.all(black_top_hat(img, se) >= 0)
        assert np.all(black_top_hat(grey_closing(img, se), se) == 0)


class TestNormalize:

    def test_minmax(self):
        np.testing.assert_allclose(minmax_normalize([[2.0, 4.0], [3.0, 2.0]]), [[0.0, 1.0], [0.5, 0.0]])

    def test_minmax_constant(self):
        assert np.all(minmax_normalize(np.full((3, 3), 7.0)) == 0)

    def test_max(self):
        np.testing.assert_allclose(max_normalize([[0.0, 2.0], [4.0, 1.0]]), [[0.0, 0.5], [1.0, 0.25]])

    def test_max_all_zero(self):
        assert np.all(max_normalize(np.zeros((2, 2))) == 0)
