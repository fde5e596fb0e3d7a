"""Dataset handling: directory ingest, stratified splitting, and a
synthetic leaf generator for tests and benchmarks.

Class labels are fixed: healthy leaves and rust-infected leaves, stored
under ``healthy/`` and ``rust/`` subdirectories.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .preprocessing import _axis_weights, quantize_u8, resample_plane

logger = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg"}

MIN_IMAGE_SIDE = 8

# Per-pixel sensor noise level for synthetic images, clipped at three
# standard deviations so healthy pixels can never reach lesion brightness.
NOISE_SIGMA = 8.0


class Label(IntEnum):
    HEALTHY = 0
    RUST = 1

    @property
    def dirname(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class RawSample:
    """One labeled RGB image, at least 8x8 pixels."""

    path: str
    label: Label
    image: np.ndarray

    def __post_init__(self):
        image = np.asarray(self.image)
        if image.ndim != 3 or image.shape[2] != 3 or image.dtype != np.uint8:
            raise ValueError(
                f"sample image must be uint8 (H, W, 3), got {image.shape} {image.dtype}"
            )
        if image.shape[0] < MIN_IMAGE_SIDE or image.shape[1] < MIN_IMAGE_SIDE:
            raise ValueError(
                f"sample image must be at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, "
                f"got {image.shape[0]}x{image.shape[1]}"
            )
        image.setflags(write=False)
        object.__setattr__(self, "image", image)
        object.__setattr__(self, "label", Label(self.label))


def load_directory(root) -> list[RawSample]:
    """Read every decodable PNG/JPEG under root/healthy and root/rust.

    Undecodable or undersized files are skipped with a warning; a missing
    class directory or a directory with zero decodable images is fatal.
    Samples come back ordered lexicographically by path.
    """
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"dataset directory not found: {root}")
    entries: list[tuple[str, Label]] = []
    for label in Label:
        class_dir = root / label.dirname
        if not class_dir.is_dir():
            raise FileNotFoundError(
                f"missing class directory '{label.dirname}' under {root}"
            )
        for path in class_dir.iterdir():
            if path.is_file() and path.suffix.lower() in IMAGE_SUFFIXES:
                entries.append((str(path), label))
    entries.sort(key=lambda item: item[0])

    samples: list[RawSample] = []
    skipped = 0
    for path, label in entries:
        try:
            with Image.open(path) as handle:
                image = np.asarray(handle.convert("RGB"), dtype=np.uint8)
        except (UnidentifiedImageError, OSError) as exc:
            logger.warning("skipping undecodable image %s (%s)", path, exc)
            skipped += 1
            continue
        if image.shape[0] < MIN_IMAGE_SIDE or image.shape[1] < MIN_IMAGE_SIDE:
            logger.warning(
                "skipping image %s: smaller than %dx%d",
                path, MIN_IMAGE_SIDE, MIN_IMAGE_SIDE,
            )
            skipped += 1
            continue
        samples.append(RawSample(path=path, label=label, image=image))
    if skipped:
        logger.warning("skipped %d unusable file(s) under %s", skipped, root)
    if not samples:
        raise ValueError(f"no decodable images found under {root}")
    return samples


def save_dataset(samples, root) -> dict[str, int]:
    """Write samples as PNGs into root/healthy and root/rust.

    Files are numbered in input order so a reload sees the same sequence.
    Returns a per-class count.
    """
    root = Path(root)
    for label in Label:
        (root / label.dirname).mkdir(parents=True, exist_ok=True)
    counts = {label.dirname: 0 for label in Label}
    for index, sample in enumerate(samples):
        target = root / sample.label.dirname / f"{index:05d}.png"
        Image.fromarray(np.asarray(sample.image)).save(target)
        counts[sample.label.dirname] += 1
    return counts


@dataclass(frozen=True)
class DatasetSplit:
    """Disjoint train/validation/test partitions of one sample list."""

    train: tuple[RawSample, ...]
    validation: tuple[RawSample, ...]
    test: tuple[RawSample, ...]
    fractions: tuple[float, float, float]
    seed: int

    @property
    def parts(self) -> dict[str, tuple[RawSample, ...]]:
        return {"train": self.train, "validation": self.validation, "test": self.test}


def _largest_remainder(total: int, fractions) -> list[int]:
    """Integer allocation of ``total`` across parts; ties favor lower index."""
    ideal = [total * f for f in fractions]
    base = [int(np.floor(x)) for x in ideal]
    leftover = total - sum(base)
    order = sorted(range(len(fractions)), key=lambda p: (-(ideal[p] - base[p]), p))
    for p in order[:leftover]:
        base[p] += 1
    return base


def split_dataset(samples, fractions=(0.7, 0.15, 0.15), seed=0) -> DatasetSplit:
    """Shuffle and partition samples class by class.

    Every class lands in every part in proportion to the fractions (within
    one sample), and the global part sizes follow the fractions exactly
    under largest-remainder rounding. The same seed and input order always
    produce the same split.
    """
    samples = list(samples)
    fractions = tuple(float(f) for f in fractions)
    if len(fractions) != 3:
        raise ValueError(f"expected three fractions, got {len(fractions)}")
    if any(f <= 0.0 for f in fractions):
        raise ValueError(f"fractions must all be positive, got {fractions}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got sum {sum(fractions)!r}")
    if not samples:
        raise ValueError("cannot split an empty sample list")

    by_class: dict[Label, list[int]] = {}
    for index, sample in enumerate(samples):
        by_class.setdefault(sample.label, []).append(index)
    n_parts = len(fractions)
    for label, indices in by_class.items():
        if len(indices) < n_parts:
            raise ValueError(
                f"class '{label.dirname}' has {len(indices)} sample(s), "
                f"fewer than the {n_parts} requested parts"
            )

    targets = _largest_remainder(len(samples), fractions)
    allocated = [0] * n_parts
    part_indices: list[list[int]] = [[] for _ in range(n_parts)]
    rng = np.random.Generator(np.random.PCG64(seed))
    for label in sorted(by_class):
        indices = by_class[label]
        shuffled = [indices[i] for i in rng.permutation(len(indices))]
        n = len(indices)
        ideal = [n * f for f in fractions]
        counts = [int(np.floor(x)) for x in ideal]
        leftover = n - sum(counts)
        # hand leftovers to the parts with the largest fractional remainder,
        # breaking ties toward the part furthest below its global target
        deficits = [targets[p] - allocated[p] - counts[p] for p in range(n_parts)]
        order = sorted(
            range(n_parts),
            key=lambda p: (-(ideal[p] - counts[p]), -deficits[p], p),
        )
        for p in order[:leftover]:
            counts[p] += 1
        cursor = 0
        for p in range(n_parts):
            part_indices[p].extend(shuffled[cursor : cursor + counts[p]])
            cursor += counts[p]
            allocated[p] += counts[p]

    parts = [
        tuple(samples[i] for i in sorted(chunk)) for chunk in part_indices
    ]
    return DatasetSplit(
        train=parts[0],
        validation=parts[1],
        test=parts[2],
        fractions=fractions,
        seed=int(seed),
    )


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic leaf generator.

    lesion_strength is the brightness added where a speck lands; the
    default saturates to pure white. Lowering it buries the specks in the
    leaf texture, which makes the classification task much harder.
    """

    count: int = 600
    resolution: int = 128
    lesion_probability: float = 0.5
    lesion_count_range: tuple[int, int] = (2, 5)
    lesion_diameter_px: tuple[int, int] = (3, 6)
    lesion_strength: int = 255
    seed: int = 0

    def __post_init__(self):
        if self.count < 1:
            raise ValueError(f"count must be positive, got {self.count}")
        if self.resolution < MIN_IMAGE_SIDE:
            raise ValueError(
                f"resolution must be at least {MIN_IMAGE_SIDE}, got {self.resolution}"
            )
        if not 0.0 <= self.lesion_probability <= 1.0:
            raise ValueError(
                f"lesion_probability must lie in [0, 1], got {self.lesion_probability}"
            )
        lo, hi = self.lesion_count_range
        if not (1 <= lo <= hi):
            raise ValueError(
                f"lesion_count_range must satisfy 1 <= low <= high, got {self.lesion_count_range}"
            )
        dlo, dhi = self.lesion_diameter_px
        if not (1 <= dlo <= dhi):
            raise ValueError(
                f"lesion_diameter_px must satisfy 1 <= low <= high, got {self.lesion_diameter_px}"
            )
        if dhi >= self.resolution:
            raise ValueError(
                f"lesion diameter {dhi} does not fit inside a "
                f"{self.resolution}x{self.resolution} image"
            )
        if not (1 <= self.lesion_strength <= 255):
            raise ValueError(
                f"lesion_strength must lie in [1, 255], got {self.lesion_strength}"
            )


def _ellipse_mask(side, cy, cx, a, b, theta):
    ys, xs = np.mgrid[0:side, 0:side]
    dy = ys - cy
    dx = xs - cx
    cos = np.cos(theta)
    sin = np.sin(theta)
    u = dx * cos + dy * sin
    v = -dx * sin + dy * cos
    return (u / a) ** 2 + (v / b) ** 2 <= 1.0


def _smooth_field(rng, side, cells=9):
    """Low-frequency texture: a coarse normal grid blown up bilinearly."""
    coarse = rng.normal(0.0, 1.0, (cells, cells))
    rows = _axis_weights(cells, side)
    return np.clip(resample_plane(coarse, rows, rows), -2.0, 2.0)


def _render_leaf(rng, config: SynthConfig, is_rust: bool) -> np.ndarray:
    side = config.resolution
    image = np.empty((side, side, 3), dtype=np.float64)
    image[:, :] = (30.0, 26.0, 22.0)

    cy = side / 2 + rng.uniform(-0.05, 0.05) * side
    cx = side / 2 + rng.uniform(-0.05, 0.05) * side
    a = rng.uniform(0.32, 0.44) * side
    b = rng.uniform(0.22, 0.34) * side
    theta = rng.uniform(0.0, np.pi)
    leaf = _ellipse_mask(side, cy, cx, a, b, theta)

    texture = _smooth_field(rng, side)
    green = 132.0 + 14.0 * texture
    image[leaf, 0] = green[leaf] * 0.58
    image[leaf, 1] = green[leaf]
    image[leaf, 2] = green[leaf] * 0.36

    noise = rng.normal(0.0, NOISE_SIGMA, (side, side, 3))
    np.clip(noise, -3.0 * NOISE_SIGMA, 3.0 * NOISE_SIGMA, out=noise)
    image += noise
    np.clip(image, 0.0, 255.0, out=image)

    if is_rust:
        # specks must land a couple of pixels inside the leaf outline
        core = _ellipse_mask(side, cy, cx, max(a - 2.5, 1.0), max(b - 2.5, 1.0), theta)
        lo, hi = config.lesion_count_range
        dlo, dhi = config.lesion_diameter_px
        n_lesions = int(rng.integers(lo, hi + 1))
        for _ in range(n_lesions):
            diameter = int(rng.integers(dlo, dhi + 1))
            radius = diameter / 2.0
            speck = None
            for _ in range(50):
                sy = rng.uniform(radius + 1, side - radius - 1)
                sx = rng.uniform(radius + 1, side - radius - 1)
                ratio = rng.uniform(0.6, 1.0)
                angle = rng.uniform(0.0, np.pi)
                candidate = _ellipse_mask(side, sy, sx, radius, radius * ratio, angle)
                if candidate.any() and core[candidate].all():
                    speck = candidate
                    break
            if speck is None:
                # fall back to the leaf center, which is always inside
                speck = _ellipse_mask(side, cy, cx, radius, radius, 0.0)
            image[speck] = np.minimum(255.0, image[speck] + config.lesion_strength)

    return quantize_u8(image)


def generate_synthetic(config: SynthConfig) -> list[RawSample]:
    """Deterministically render labeled leaf images.

    Each image is a green elliptical leaf with smooth mottling and pixel
    noise on a dark background. Rust samples additionally carry a few
    small bright elliptical specks, stamped after the noise so they stay
    crisp. Every image is a pure function of (config, index).
    """
    samples = []
    for index in range(config.count):
        seq = np.random.SeedSequence([int(config.seed), index])
        rng = np.random.Generator(np.random.PCG64(seq))
        is_rust = bool(rng.random() < config.lesion_probability)
        image = _render_leaf(rng, config, is_rust)
        label = Label.RUST if is_rust else Label.HEALTHY
        samples.append(
            RawSample(
                path=f"synthetic:{config.seed}/{index:05d}",
                label=label,
                image=image,
            )
        )
    return samples
