#!/usr/bin/env python3
"""
Raster container, image I/O, Gaussian smoothing, gradient field and grey
morphology (including the black top-hat used for shadow suppression).

A raster is a 2-D float64 numpy array indexed [y, x] with finite values;
8-bit inputs are scaled to [0, 1] on load. Every border is handled by edge
replication (scipy.ndimage mode 'nearest').
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from scipy import ndimage

from atomic_io import atomic_path
from errors import ImageFormatError, ParameterError

# ITU-R 601 luma weights for the brightness channel
LUMA_WEIGHTS = (0.299, 0.587, 0.114)

# PIL format names by output suffix
SAVE_FORMATS = {
    ".pgm": "PPM",
    ".png": "PNG",
}


def as_raster(values):
    """Validate and convert an array-like to a raster.

    Args:
        values: 2-D array-like of real values

    Returns:
        float64 ndarray of shape (height, width)
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 2:
        raise ParameterError(f"raster must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ParameterError(f"raster must be at least 1x1, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ParameterError("raster contains NaN or Inf values")
    return arr


def _decode(path):
    """Read an 8-bit image file into a float array (grayscale or RGB)."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"image not found: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            mode = im.mode
            if mode == "1":
                im = im.convert("L")
            elif mode == "P":
                im = im.convert("RGB")
            elif mode in ("RGBA", "LA"):
                im = im.convert("RGB" if mode == "RGBA" else "L")
            elif mode not in ("L", "RGB"):
                raise ImageFormatError(
                    f"{path.name}: unsupported image mode {mode} (8-bit gray or RGB only)"
                )
            arr = np.asarray(im, dtype=np.float64)
    except UnidentifiedImageError as e:
        raise ImageFormatError(f"{path.name}: not a readable PNG/PGM image") from e
    return arr / 255.0


def load_image(path):
    """Load a PNG/PGM file as a brightness raster in [0, 1].

    RGB inputs are reduced to luma (0.299 R + 0.587 G + 0.114 B).
    """
    arr = _decode(path)
    if arr.ndim == 3:
        r, g, b = LUMA_WEIGHTS
        arr = r * arr[..., 0] + g * arr[..., 1] + b * arr[..., 2]
    return as_raster(np.clip(arr, 0.0, 1.0))


def load_mask(path):
    """Load a ground-truth footprint mask; pixel value > 127 means building."""
    img = load_image(path)
    return (img > 127.0 / 255.0).astype(np.float64)


def to_uint8(img):
    """Clamp to [0, 1] and quantize to 8 bits."""
    return np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)


def save_image(img, path):
    """Write a raster as 8-bit grayscale PGM (P5) or PNG, atomically."""
    path = Path(path)
    fmt = SAVE_FORMATS.get(path.suffix.lower())
    if fmt is None:
        raise ImageFormatError(f"{path.name}: output must be .pgm or .png")
    im = Image.fromarray(to_uint8(as_raster(img)), mode="L")
    with atomic_path(path) as tmp:
        im.save(tmp, format=fmt)
    return path


def gaussian_kernel(side, sigma):
    """Sampled, unit-sum 1-D Gaussian taps of odd length `side`."""
    if side < 1 or side % 2 == 0:
        raise ParameterError(f"Gaussian kernel side must be odd and >= 1, got {side}")
    if sigma <= 0:
        raise ParameterError(f"Gaussian sigma must be > 0, got {sigma}")
    radius = side // 2
    offsets = np.arange(-radius, radius + 1, dtype=np.float64)
    taps = np.exp(-(offsets ** 2) / (2.0 * sigma * sigma))
    return taps / taps.sum()


def gaussian_blur(img, side, sigma):
    """Separable Gaussian convolution with edge replication."""
    img = as_raster(img)
    taps = gaussian_kernel(side, sigma)
    out = ndimage.convolve1d(img, taps, axis=0, mode="nearest")
    return ndimage.convolve1d(out, taps, axis=1, mode="nearest")


@dataclass(frozen=True)
class GradientField:
    """Max-normalized gradient magnitude and gradient direction in [0, 2*pi)."""

    magnitude: np.ndarray
    orientation: np.ndarray

    @property
    def shape(self):
        return self.magnitude.shape


def gradient_field(img):
    """Central differences inside, one-sided at borders.

    The magnitude is divided by its image-wide maximum, so a constant image
    yields all zeros; orientation is atan2(dy, dx) and 0 where the gradient
    vanishes.
    """
    img = as_raster(img)
    if img.shape[0] < 2 or img.shape[1] < 2:
        raise ParameterError(f"gradient needs at least 2x2 pixels, got shape {img.shape}")

    dy, dx = np.gradient(img)
    magnitude = np.hypot(dx, dy)
    peak = magnitude.max()
    if peak > 0:
        magnitude = magnitude / peak

    orientation = np.mod(np.arctan2(dy, dx), 2.0 * np.pi)
    # mod can round tiny negatives up to exactly 2*pi
    orientation[orientation >= 2.0 * np.pi] = 0.0
    orientation[magnitude == 0] = 0.0
    return GradientField(magnitude=magnitude, orientation=orientation)


@dataclass(frozen=True)
class StructuringElement:
    """Flat square structuring element with an odd side."""

    side: int

    def __post_init__(self):
        if self.side < 1 or self.side % 2 == 0:
            raise ParameterError(f"structuring element side must be odd and >= 1, got {self.side}")


def grey_dilation(img, se):
    return ndimage.maximum_filter(as_raster(img), size=se.side, mode="nearest")


def grey_erosion(img, se):
    return ndimage.minimum_filter(as_raster(img), size=se.side, mode="nearest")


def grey_closing(img, se):
    """Dilation followed by erosion."""
    return grey_erosion(grey_dilation(img, se), se)


def black_top_hat(img, se):
    """closing(img) - img; highlights dark compact regions such as shadows."""
    img = as_raster(img)
    return np.maximum(grey_closing(img, se) - img, 0.0)


def minmax_normalize(img):
    """Rescale to [0, 1]; a constant raster maps to zeros."""
    img = as_raster(img)
    lo, hi = img.min(), img.max()
    if hi <= lo:
        return np.zeros_like(img)
    return (img - lo) / (hi - lo)


def max_normalize(img):
    """Divide a non-negative raster by its maximum; all-zero stays all-zero."""
    img = as_raster(img)
    peak = img.max()
    if peak <= 0:
        return np.zeros_like(img)
    return img / peak
