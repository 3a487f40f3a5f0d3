"""
Synthetic desk-scale benchmark.

Class-conditional Gaussian mixtures: every class owns several clusters
whose centers are scattered at random, so the classes are not linearly
separable. All four splits are drawn i.i.d. from the same mixture, each
from its own child stream, so the size of one split never changes the
draws of another.
"""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, NamedTuple, Optional, Tuple

import numpy as np

from shallowmimic.data.dataset import Dataset, Labels
from shallowmimic.exceptions import ConfigurationError
from shallowmimic.numerics.matrix import Matrix
from shallowmimic.numerics.rng import RngStream
from shallowmimic.utils.constants import BenchmarkDefaults
from shallowmimic.utils.validators import validate_fraction

logger = logging.getLogger(__name__)

# child stream ids
_CENTERS, _TRAIN, _UNLABELED, _DEV, _TEST, _NOISE = range(6)


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of the Gaussian-mixture benchmark.

    Attributes:
        classes: Number of classes C (>= 2).
        dims: Feature dimension D.
        clusters_per_class: Mixture components per class.
        separation: Scale of the cluster centers; centers are drawn from
            ``N(0, separation^2 / D)`` per coordinate.
        cluster_std: Isotropic standard deviation inside a cluster.
        n_train: Labeled training rows.
        n_unlabeled: Unlabeled transfer-pool rows.
        n_dev: Dev rows.
        n_test: Test rows.
        label_noise: Fraction of training labels flipped to another class.
        image_shape: Optional ``(channels, h, w)`` with product D.
    """

    classes: int = BenchmarkDefaults.CLASSES
    dims: int = BenchmarkDefaults.DIMS
    clusters_per_class: int = BenchmarkDefaults.CLUSTERS_PER_CLASS
    separation: float = BenchmarkDefaults.SEPARATION
    cluster_std: float = BenchmarkDefaults.CLUSTER_STD
    n_train: int = BenchmarkDefaults.N_TRAIN
    n_unlabeled: int = BenchmarkDefaults.N_UNLABELED
    n_dev: int = BenchmarkDefaults.N_DEV
    n_test: int = BenchmarkDefaults.N_TEST
    label_noise: float = 0.0
    image_shape: Optional[Tuple[int, int, int]] = field(default=None)

    def __post_init__(self) -> None:
        if self.classes < 2:
            raise ConfigurationError(f"Synthetic data needs at least 2 classes. Got {self.classes}")
        if self.dims < 1 or self.clusters_per_class < 1:
            raise ConfigurationError("dims and clusters_per_class must be positive")
        if self.separation < 0 or self.cluster_std < 0:
            raise ConfigurationError("separation and cluster_std must be non-negative")
        for name in ("n_train", "n_unlabeled", "n_dev", "n_test"):
            if getattr(self, name) < 0:
                raise ConfigurationError(f"{name} must be non-negative. Got {getattr(self, name)}")
        validate_fraction("label_noise", self.label_noise)
        if self.image_shape is not None:
            shape = tuple(int(s) for s in self.image_shape)
            if len(shape) != 3 or int(np.prod(shape)) != self.dims:
                raise ConfigurationError(
                    f"image_shape {shape} does not have {self.dims} elements"
                )
            object.__setattr__(self, "image_shape", shape)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "classes": self.classes,
            "dims": self.dims,
            "clusters_per_class": self.clusters_per_class,
            "separation": self.separation,
            "cluster_std": self.cluster_std,
            "n_train": self.n_train,
            "n_unlabeled": self.n_unlabeled,
            "n_dev": self.n_dev,
            "n_test": self.n_test,
            "label_noise": self.label_noise,
            "image_shape": list(self.image_shape) if self.image_shape else None,
        }


class SyntheticSplits(NamedTuple):
    """The four benchmark splits."""

    train: Dataset
    unlabeled: Matrix
    dev: Dataset
    test: Dataset


def _draw(
    rng: RngStream, centers: Matrix, spec: SyntheticSpec, count: int
) -> Tuple[Matrix, Labels]:
    components = rng.integers(0, centers.shape[0], count)
    noise = rng.standard_normal((count, spec.dims))
    features = centers[components] + spec.cluster_std * noise
    return features, components // spec.clusters_per_class


def _flip_labels(rng: RngStream, labels: Labels, classes: int, rate: float) -> Labels:
    flip = rng.random(labels.shape[0]) < rate
    shift = rng.integers(1, classes, labels.shape[0])
    noisy = np.where(flip, (labels + shift) % classes, labels)
    logger.debug(f"Flipped {int(flip.sum())} of {labels.shape[0]} training labels")
    return noisy.astype(np.int64)


def make_synthetic(spec: SyntheticSpec, seed: int) -> SyntheticSplits:
    """
    Generate the benchmark splits.

    Args:
        spec: Mixture parameters and split sizes.
        seed: Root seed; identical seeds give identical splits.

    Returns:
        SyntheticSplits of (train, unlabeled features, dev, test). Label
        noise, if any, is applied to the training labels only.
    """
    root = RngStream(seed)
    components = spec.classes * spec.clusters_per_class
    center_scale = spec.separation / np.sqrt(spec.dims)
    centers = center_scale * root.spawn(_CENTERS).standard_normal((components, spec.dims))

    def labeled(stream_id: int, count: int) -> Dataset:
        features, labels = _draw(root.spawn(stream_id), centers, spec, count)
        if stream_id == _TRAIN and spec.label_noise > 0.0:
            labels = _flip_labels(root.spawn(_NOISE), labels, spec.classes, spec.label_noise)
        return Dataset(features, spec.classes, hard_labels=labels, input_shape=spec.image_shape)

    train = labeled(_TRAIN, spec.n_train)
    unlabeled, _ = _draw(root.spawn(_UNLABELED), centers, spec, spec.n_unlabeled)
    dev = labeled(_DEV, spec.n_dev)
    test = labeled(_TEST, spec.n_test)

    logger.info(
        f"Generated synthetic benchmark (seed={seed}): train={spec.n_train}, "
        f"unlabeled={spec.n_unlabeled}, dev={spec.n_dev}, test={spec.n_test}, "
        f"C={spec.classes}, D={spec.dims}"
    )
    return SyntheticSplits(train, unlabeled, dev, test)
