"""Synthetic datasets: 2-D Gaussian clusters and tiny labeled images.

The toy clusters mirror the ten-blob setup used for the 2-D pipeline; the
tiny-image generator synthesizes class-distinct 32x32 gratings (orientation
plus a class-correlated brightness offset) as a desk-scale stand-in for a
labeled image corpus.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .image import Image, load_pixmap, to_u8


@dataclass
class ClusterSpec:
    cluster_count: int = 10
    points_per_cluster: int = 500
    center_box: float = 4.0
    cluster_std: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.cluster_count < 2:
            raise ValueError("need at least 2 clusters")
        if self.cluster_std <= 0:
            raise ValueError("cluster std must be positive")
        if self.points_per_cluster < 1:
            raise ValueError("need at least one point per cluster")


@dataclass
class LabeledDataset:
    """Features plus labels with a seeded train/held-out split."""

    features: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int
    class_count: int
    train_idx: np.ndarray
    heldout_idx: np.ndarray
    images: list[Image] | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.shape[0] != self.labels.shape[0]:
            raise ValueError("features and labels disagree on sample count")
        if self.labels.min() < 0 or self.labels.max() >= self.class_count:
            raise ValueError(f"labels must lie in [0, {self.class_count})")
        train = set(self.train_idx.tolist())
        held = set(self.heldout_idx.tolist())
        if not train or not held:
            raise ValueError("both splits must be non-empty")
        if train & held:
            raise ValueError("train and held-out indices overlap")

    @property
    def size(self) -> int:
        return self.features.shape[0]

    @property
    def width(self) -> int:
        return self.features.shape[1]

    def with_features(self, features: np.ndarray) -> "LabeledDataset":
        """Same labels and split over transformed features."""
        features = np.asarray(features, dtype=np.float64)
        if features.shape[0] != self.size:
            raise ValueError("replacement features must keep the sample count")
        return replace(self, features=features, images=None)


def _split_indices(n: int, rng: np.random.Generator, heldout_fraction: float = 0.1):
    order = rng.permutation(n)
    cut = max(1, int(round(n * heldout_fraction)))
    return np.sort(order[cut:]), np.sort(order[:cut])


def gen_toy_clusters(spec: ClusterSpec) -> LabeledDataset:
    """Seeded Gaussian blobs, normalized to zero mean and unit overall scale."""
    rng = np.random.default_rng(spec.seed)
    centers = rng.uniform(-spec.center_box, spec.center_box, size=(spec.cluster_count, 2))
    if len({tuple(c) for c in centers.tolist()}) != spec.cluster_count:
        raise ValueError("sampled cluster centers collide; change the seed")
    points = np.concatenate([
        c + spec.cluster_std * rng.standard_normal((spec.points_per_cluster, 2))
        for c in centers
    ])
    labels = np.repeat(np.arange(spec.cluster_count), spec.points_per_cluster)
    mean = points.mean(axis=0)
    centered = points - mean
    scale = centered.std()
    features = centered / scale
    train_idx, heldout_idx = _split_indices(features.shape[0], rng)
    return LabeledDataset(
        features=features,
        labels=labels,
        class_count=spec.cluster_count,
        train_idx=train_idx,
        heldout_idx=heldout_idx,
        meta={
            "kind": "toy-clusters",
            "mean": mean,
            "scale": float(scale),
            "centers": (centers - mean) / scale,
            "cluster_std": spec.cluster_std / float(scale),
        },
    )


def denormalize_toy(dataset: LabeledDataset, features: np.ndarray) -> np.ndarray:
    return features * dataset.meta["scale"] + dataset.meta["mean"]


def normalize_toy(dataset: LabeledDataset, points: np.ndarray) -> np.ndarray:
    return (points - dataset.meta["mean"]) / dataset.meta["scale"]


# ---------------------------------------------------------------------------
# tiny images


def pixels_to_features(pixels: np.ndarray) -> np.ndarray:
    """Map 8-bit pixels to [-1, 1]: 0 -> -1 and 255 -> +1."""
    return np.asarray(pixels, dtype=np.float64) / 127.5 - 1.0


def features_to_pixels(features: np.ndarray) -> np.ndarray:
    return to_u8((np.asarray(features, dtype=np.float64) + 1.0) * 127.5)


def _grating_image(rng: np.random.Generator, size: int, theta: float,
                   brightness: float) -> Image:
    xs, ys = np.meshgrid(np.arange(size), np.arange(size))
    phase = rng.uniform(0.0, 2.0 * np.pi)
    amp = 0.35 + rng.uniform(-0.05, 0.05)
    period = 6.0
    wave = np.sin(2.0 * np.pi * (xs * np.cos(theta) + ys * np.sin(theta)) / period + phase)
    value = brightness + amp * wave + 0.06 * rng.standard_normal((size, size))
    return Image.from_array(to_u8((np.clip(value, -1.0, 1.0) + 1.0) * 127.5))


def make_tiny_image_dataset(source_dir=None, size: int = 32, class_count: int = 10,
                            per_class: int = 80, seed: int = 0) -> LabeledDataset:
    """Flattened [-1, 1] image features with labels and the images themselves.

    Without a source directory, synthesizes per-class oriented gratings with
    a class-correlated brightness offset. With one, each subdirectory is a
    class of same-sized pixmaps (at least 20 per class).
    """
    rng = np.random.default_rng(seed)
    if source_dir is None:
        brightnesses = np.linspace(-0.45, 0.45, class_count)
        images: list[Image] = []
        labels = []
        for c in range(class_count):
            theta = np.pi * c / class_count
            for _ in range(per_class):
                images.append(_grating_image(rng, size, theta, brightnesses[c]))
                labels.append(c)
    else:
        class_dirs = sorted(p for p in Path(source_dir).iterdir() if p.is_dir())
        if len(class_dirs) < 2:
            raise ValueError(f"need at least 2 class directories under {source_dir}")
        images, labels = [], []
        for c, cdir in enumerate(class_dirs):
            files = sorted(cdir.glob("*.p[gp]m"))
            if len(files) < 20:
                raise ValueError(f"class {cdir.name} has {len(files)} samples, need >= 20")
            for f in files:
                img = load_pixmap(f)
                if (img.height, img.width) != (size, size):
                    raise ValueError(f"{f} is {img.width}x{img.height}, expected {size}x{size}")
                images.append(img)
                labels.append(c)
        class_count = len(class_dirs)
    if len(images) < 20 * class_count:
        raise ValueError("need at least 20 samples per class")
    labels_arr = np.asarray(labels)
    features = np.stack([pixels_to_features(img.pixels).reshape(-1) for img in images])
    train_idx, heldout_idx = _split_indices(len(images), rng)
    return LabeledDataset(
        features=features,
        labels=labels_arr,
        class_count=class_count,
        train_idx=train_idx,
        heldout_idx=heldout_idx,
        images=images,
        meta={"kind": "tiny-images", "size": size, "channels": images[0].channels},
    )
