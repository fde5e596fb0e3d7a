"""Input checking helpers shared across the package.

Every public entry point validates its inputs through these functions so
error messages stay consistent and tests can rely on their wording.
"""

from __future__ import annotations

import numpy as np


def check_rgb_u8(image) -> np.ndarray:
    """Return ``image`` as an (H, W, 3) uint8 array or raise ValueError."""
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(
            f"expected an RGB image with shape (H, W, 3), got shape {arr.shape}"
        )
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixel data, got dtype {arr.dtype}")
    return arr


def check_gray_u8(image) -> np.ndarray:
    """Return ``image`` as an (H, W) uint8 array or raise ValueError."""
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ValueError(
            f"expected a single-channel image with shape (H, W), got shape {arr.shape}"
        )
    if arr.dtype != np.uint8:
        raise ValueError(f"expected uint8 pixel data, got dtype {arr.dtype}")
    return arr


def check_u8_image(image) -> np.ndarray:
    """Accept (H, W) or (H, W, 3) uint8 arrays."""
    arr = np.asarray(image)
    if arr.ndim == 2:
        return check_gray_u8(arr)
    if arr.ndim == 3 and arr.shape[2] == 3:
        return check_rgb_u8(arr)
    raise ValueError(
        f"expected shape (H, W) or (H, W, 3), got shape {arr.shape}"
    )


def check_kernel3(kernel) -> np.ndarray:
    """Return a finite 3x3 float64 kernel or raise ValueError."""
    arr = np.asarray(kernel, dtype=np.float64)
    if arr.shape != (3, 3):
        raise ValueError(f"kernel must be 3x3, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("kernel entries must be finite")
    return arr


def check_positive_int(value, name: str) -> int:
    if not isinstance(value, (int, np.integer)) or isinstance(value, bool):
        raise ValueError(f"{name} must be an integer, got {value!r}")
    if value < 1:
        raise ValueError(f"{name} must be positive, got {value}")
    return int(value)


def check_fraction(value, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def check_label_array(y, n_classes: int) -> np.ndarray:
    """Return integer class indices in [0, n_classes) as a 1-D int array."""
    arr = np.asarray(y)
    if arr.ndim != 1:
        raise ValueError(f"labels must be one-dimensional, got shape {arr.shape}")
    if arr.size == 0:
        raise ValueError("labels are empty")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(arr == arr.astype(np.int64)):
            raise ValueError("labels must be integers")
    arr = arr.astype(np.int64)
    if arr.min() < 0 or arr.max() >= n_classes:
        raise ValueError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{arr.min()}, {arr.max()}]"
        )
    return arr
