"""Image preprocessing: grayscale conversion, high-pass filtering,
normalization, histogram equalization, and resizing.

All functions take and return 8-bit arrays except convolve2d, whose output
is a signed float64 response map. Quantization always rounds half away
from zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from .validation import check_gray_u8, check_kernel3, check_rgb_u8, check_u8_image

# Horizontal-gradient high-pass kernel. Zero-sum, so flat regions map to
# zero; a dark-to-bright vertical edge produces a strong negative response.
DEFAULT_KERNEL = np.array(
    [
        [1.0, 0.0, -1.0],
        [2.0, 0.0, -2.0],
        [1.0, 0.0, -1.0],
    ]
)

# ITU-R BT.601 luma weights.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)


class PreprocessMethod(Enum):
    """Preprocessing chains selectable ahead of the classifier."""

    EDGE_GRAY = "edge-gray"
    GRAY_ONLY = "gray-only"
    COLOR_RAW = "color-raw"
    EDGE_EQUALIZE = "edge-equalize"

    @property
    def channels(self) -> int:
        return 3 if self is PreprocessMethod.COLOR_RAW else 1


def round_half_away(values: np.ndarray) -> np.ndarray:
    """Round to nearest integer with ties going away from zero."""
    values = np.asarray(values, dtype=np.float64)
    return np.sign(values) * np.floor(np.abs(values) + 0.5)


def quantize_u8(values: np.ndarray) -> np.ndarray:
    """Round half away from zero and clip into the byte range."""
    return np.clip(round_half_away(values), 0.0, 255.0).astype(np.uint8)


def to_grayscale(image) -> np.ndarray:
    """Collapse an RGB image to single-channel luma."""
    image = check_rgb_u8(image)
    planes = image.astype(np.float64)
    luma = (
        GRAY_WEIGHTS[0] * planes[:, :, 0]
        + GRAY_WEIGHTS[1] * planes[:, :, 1]
        + GRAY_WEIGHTS[2] * planes[:, :, 2]
    )
    return quantize_u8(luma)


def convolve2d(image, kernel=None) -> np.ndarray:
    """Apply a 3x3 kernel with zero padding; same-size signed output.

    The kernel is applied as written, without a 180-degree flip:

        response[y, x] = sum_ij kernel[i, j] * image[y + i - 1, x + j - 1]

    Pixels outside the image count as zero. The response is exact float64
    and is not clamped; accumulation runs over kernel cells in row-major
    order, which pins the floating-point rounding sequence.
    """
    image = check_gray_u8(image)
    kernel = check_kernel3(DEFAULT_KERNEL if kernel is None else kernel)
    h, w = image.shape
    if h < 3 or w < 3:
        raise ValueError(f"image must be at least 3x3 to filter, got {h}x{w}")
    padded = np.zeros((h + 2, w + 2), dtype=np.float64)
    padded[1:-1, 1:-1] = image
    response = np.zeros((h, w), dtype=np.float64)
    for i in range(3):
        for j in range(3):
            response += kernel[i, j] * padded[i : i + h, j : j + w]
    return response


def min_max_normalize(response) -> np.ndarray:
    """Rescale a real-valued map onto [0, 255] with 8-bit quantization.

    A constant map has no scale and comes back all zeros.
    """
    response = np.asarray(response, dtype=np.float64)
    if response.size == 0:
        raise ValueError("cannot normalize an empty array")
    if not np.all(np.isfinite(response)):
        raise ValueError("response map contains non-finite values")
    lo = response.min()
    hi = response.max()
    if hi == lo:
        return np.zeros(response.shape, dtype=np.uint8)
    return quantize_u8(255.0 * (response - lo) / (hi - lo))


def histogram_equalize(image) -> np.ndarray:
    """Spread intensities with the classic 256-bin cumulative mapping.

    new_value = round((cdf(v) - cdf_min) / (n_pixels - cdf_min) * 255)

    where cdf_min is the cumulative count at the darkest occupied bin.
    A constant image maps to all zeros.
    """
    image = check_gray_u8(image)
    hist = np.bincount(image.ravel(), minlength=256)
    cdf = np.cumsum(hist)
    n = image.size
    cdf_min = int(cdf[hist > 0][0])
    if n == cdf_min:
        return np.zeros_like(image)
    lut = quantize_u8(255.0 * (cdf - cdf_min) / float(n - cdf_min))
    return lut[image]


def _box_weights(n_src: int, n_dst: int) -> np.ndarray:
    """Area-averaging weights for one axis of a downscale, (n_dst, n_src)."""
    weights = np.zeros((n_dst, n_src), dtype=np.float64)
    scale = n_src / n_dst
    for d in range(n_dst):
        start = d * scale
        end = start + scale
        first = int(np.floor(start))
        last = min(n_src, int(np.ceil(end)))
        for k in range(first, last):
            overlap = min(end, k + 1) - max(start, k)
            if overlap > 0:
                weights[d, k] = overlap / scale
    return weights


def _bilinear_weights(n_src: int, n_dst: int) -> np.ndarray:
    """Half-pixel-centered linear weights for one axis of an upscale."""
    weights = np.zeros((n_dst, n_src), dtype=np.float64)
    scale = n_src / n_dst
    for d in range(n_dst):
        center = (d + 0.5) * scale - 0.5
        if center <= 0.0:
            weights[d, 0] = 1.0
        elif center >= n_src - 1:
            weights[d, n_src - 1] = 1.0
        else:
            k = int(np.floor(center))
            frac = center - k
            weights[d, k] = 1.0 - frac
            weights[d, k + 1] = frac
    return weights


def _axis_weights(n_src: int, n_dst: int) -> np.ndarray:
    if n_dst == n_src:
        return np.eye(n_src, dtype=np.float64)
    if n_dst < n_src:
        return _box_weights(n_src, n_dst)
    return _bilinear_weights(n_src, n_dst)


def resample_plane(plane: np.ndarray, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Apply per-axis weight matrices to a float 2-D field."""
    return rows @ plane @ cols.T


def resize(image, target: int) -> np.ndarray:
    """Resize to target x target: box averaging down, bilinear up.

    The two axes are resampled independently, so a tall image can shrink
    vertically while stretching horizontally. A same-size call returns an
    identical copy.
    """
    image = check_u8_image(image)
    if not isinstance(target, (int, np.integer)) or isinstance(target, bool) or target < 1:
        raise ValueError(f"target size must be a positive integer, got {target!r}")
    target = int(target)
    h, w = image.shape[:2]
    if h == target and w == target:
        return image.copy()
    rows = _axis_weights(h, target)
    cols = _axis_weights(w, target)
    planes = image if image.ndim == 3 else image[:, :, None]
    resampled = np.stack(
        [resample_plane(planes[:, :, c].astype(np.float64), rows, cols)
         for c in range(planes.shape[2])],
        axis=2,
    )
    out = quantize_u8(resampled)
    return out if image.ndim == 3 else out[:, :, 0]


@dataclass(frozen=True, eq=False)
class PreprocessConfig:
    """Which chain to run and what to feed the network.

    kernel only matters for the edge-based methods; resolution is the
    square side length every image ends up at.
    """

    method: PreprocessMethod = PreprocessMethod.EDGE_GRAY
    resolution: int = 128
    kernel: np.ndarray = field(default_factory=lambda: DEFAULT_KERNEL.copy())

    def __post_init__(self):
        method = self.method
        if isinstance(method, str):
            try:
                method = PreprocessMethod(method)
            except ValueError:
                names = ", ".join(m.value for m in PreprocessMethod)
                raise ValueError(
                    f"unknown preprocessing method {self.method!r}; choose one of {names}"
                ) from None
            object.__setattr__(self, "method", method)
        if not isinstance(self.resolution, (int, np.integer)) or self.resolution < 8:
            raise ValueError(
                f"resolution must be an integer of at least 8, got {self.resolution!r}"
            )
        object.__setattr__(self, "kernel", check_kernel3(self.kernel))

    @property
    def channels(self) -> int:
        return self.method.channels


def preprocess(image, config: PreprocessConfig) -> np.ndarray:
    """Run the configured chain on one RGB image.

    Filtering happens at the native resolution; resizing is always the
    final step. Output is (resolution, resolution) uint8, or
    (resolution, resolution, 3) for the color method.
    """
    image = check_rgb_u8(image)
    method = config.method
    if method is PreprocessMethod.COLOR_RAW:
        return resize(image, config.resolution)
    gray = to_grayscale(image)
    if method is PreprocessMethod.GRAY_ONLY:
        return resize(gray, config.resolution)
    edges = min_max_normalize(convolve2d(gray, config.kernel))
    if method is PreprocessMethod.EDGE_EQUALIZE:
        edges = histogram_equalize(edges)
    return resize(edges, config.resolution)


def preprocess_stages(image, config: PreprocessConfig) -> list[tuple[str, np.ndarray]]:
    """Every intermediate of the chain as an 8-bit image, for inspection.

    The signed filter response is rendered through min_max_normalize so it
    can be written out as an image.
    """
    image = check_rgb_u8(image)
    method = config.method
    stages: list[tuple[str, np.ndarray]] = [("input", image.copy())]
    if method is PreprocessMethod.COLOR_RAW:
        stages.append(("resized", resize(image, config.resolution)))
        return stages
    gray = to_grayscale(image)
    stages.append(("grayscale", gray))
    if method is PreprocessMethod.GRAY_ONLY:
        stages.append(("resized", resize(gray, config.resolution)))
        return stages
    normalized = min_max_normalize(convolve2d(gray, config.kernel))
    stages.append(("filtered", normalized))
    if method is PreprocessMethod.EDGE_EQUALIZE:
        normalized = histogram_equalize(normalized)
        stages.append(("equalized", normalized))
    stages.append(("resized", resize(normalized, config.resolution)))
    return stages


class ImagePreprocessor(BaseEstimator, TransformerMixin):
    """Stateless transformer wrapping the preprocessing chain.

    fit is a no-op; transform maps a sequence of RGB uint8 images to a
    stacked array of preprocessed images.
    """

    def __init__(self, method="edge-gray", resolution=128, kernel=None):
        self.method = method
        self.resolution = resolution
        self.kernel = kernel

    def _config(self) -> PreprocessConfig:
        kernel = DEFAULT_KERNEL if self.kernel is None else self.kernel
        return PreprocessConfig(
            method=self.method, resolution=self.resolution, kernel=kernel
        )

    def fit(self, X, y=None):
        self._config()
        return self

    def transform(self, X) -> np.ndarray:
        config = self._config()
        images = [preprocess(image, config) for image in X]
        if not images:
            side = config.resolution
            shape = (0, side, side, 3) if config.channels == 3 else (0, side, side)
            return np.zeros(shape, dtype=np.uint8)
        return np.stack(images)
