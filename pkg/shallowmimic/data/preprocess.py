"""
Feature preprocessing.

Three transforms are supported: per-dimension standardization, global
contrast normalization (per-row) and ZCA whitening. Fitted transforms are
described by PreprocessStats computed on the training set only and then
applied, frozen, to dev/test/unlabeled data. A pipeline of stats (e.g. GCN
then ZCA) can be persisted as a binary sidecar next to a model.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from shallowmimic.binary_format import BinaryReader, BinaryWriter
from shallowmimic.data.dataset import Dataset
from shallowmimic.exceptions import ContractError, NumericError, SerializationError
from shallowmimic.numerics.matrix import (
    Axis,
    Matrix,
    Vector,
    as_matrix,
    axis_stats,
    standardize_columns,
)
from shallowmimic.utils.constants import ModelFormat, NumericDefaults
from shallowmimic.utils.validators import validate_file_exists, validate_positive

logger = logging.getLogger(__name__)


class PreprocessKind(str, Enum):
    """Type of a fitted preprocessing transform."""

    STANDARDIZE = "per_dim_standardize"
    GCN = "gcn"
    ZCA = "zca"


_KIND_TAGS = {PreprocessKind.STANDARDIZE: 0, PreprocessKind.GCN: 1, PreprocessKind.ZCA: 2}
_TAG_KINDS = {tag: kind for kind, tag in _KIND_TAGS.items()}


def _empty() -> Vector:
    return np.zeros(0, dtype=np.float64)


@dataclass(frozen=True)
class PreprocessStats:
    """Frozen parameters of one preprocessing transform.

    Attributes:
        kind: Transform type.
        mu: Column means (standardize, zca); empty for gcn.
        sigma: Column standard deviations (standardize); empty otherwise.
        zca_matrix: Symmetric D x D whitening matrix, present iff kind is zca.
        epsilon: Floor (standardize, gcn) or eigenvalue regularizer (zca).
    """

    kind: PreprocessKind
    mu: Vector = field(default_factory=_empty)
    sigma: Vector = field(default_factory=_empty)
    zca_matrix: Optional[Matrix] = None
    epsilon: float = NumericDefaults.EPSILON

    def __post_init__(self) -> None:
        if (self.zca_matrix is not None) != (self.kind is PreprocessKind.ZCA):
            raise ContractError("zca_matrix must be present exactly for ZCA stats")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind.value,
            "dims": int(self.mu.size),
            "epsilon": self.epsilon,
        }


def standardize(
    train: Dataset, epsilon: float = NumericDefaults.EPSILON
) -> Tuple[Dataset, PreprocessStats]:
    """
    Standardize every feature column with training-set statistics.

    Args:
        train: Training dataset (N >= 1).
        epsilon: Floor applied to the column standard deviation.

    Returns:
        Tuple of (standardized dataset, stats for ``apply_stats``).
    """
    mean, std = axis_stats(train.features, Axis.ROWS)
    degenerate = int(np.count_nonzero(std < epsilon))
    if degenerate:
        logger.warning(f"{degenerate} feature column(s) have near-zero variance; mapped to 0")

    stats = PreprocessStats(PreprocessKind.STANDARDIZE, mean, std, epsilon=epsilon)
    return apply_stats(stats, train), stats


def gcn(images: Matrix, epsilon: float = NumericDefaults.EPSILON) -> Matrix:
    """
    Global contrast normalization of every row.

    Each row has its own mean subtracted and is divided by its own
    population standard deviation, floored at ``epsilon``.

    Raises:
        ContractError: If rows have fewer than two entries.
    """
    images = as_matrix(images, "images")
    if images.shape[1] < 2:
        raise ContractError(f"GCN needs at least 2 values per row. Got {images.shape[1]}")
    if images.shape[0] == 0:
        return images.copy()

    mean, std = axis_stats(images, Axis.COLS)
    return (images - mean[:, None]) / np.maximum(std, epsilon)[:, None]


def zca_fit(images: Matrix, epsilon: float = NumericDefaults.ZCA_EPSILON) -> PreprocessStats:
    """
    Fit a ZCA whitening transform.

    The covariance is ``Xc^T Xc / N`` of the column-centered data. With
    ``Sigma = E diag(lambda) E^T`` the whitening matrix is
    ``E diag((lambda + eps)^-1/2) E^T``; negative eigenvalues from rounding
    are clamped to zero first.

    Raises:
        ContractError: If fewer than two rows are given.
        ConfigurationError: If epsilon is not positive.
        NumericError: If the eigendecomposition does not converge.
    """
    images = as_matrix(images, "images")
    validate_positive("zca epsilon", epsilon)
    n = images.shape[0]
    if n < 2:
        raise ContractError(f"ZCA needs at least 2 rows. Got {n}")

    mean = images.mean(axis=0)
    centered = images - mean
    covariance = centered.T @ centered / n

    try:
        eigenvalues, eigenvectors = np.linalg.eigh(covariance)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"ZCA eigendecomposition failed: {e}") from e

    clamped = np.clip(eigenvalues, 0.0, None)
    if np.any(eigenvalues < 0.0):
        logger.debug(f"Clamped {int(np.count_nonzero(eigenvalues < 0))} negative eigenvalue(s)")

    whitening = (eigenvectors / np.sqrt(clamped + epsilon)) @ eigenvectors.T
    whitening = 0.5 * (whitening + whitening.T)

    logger.info(f"Fitted ZCA on {n}x{images.shape[1]} data (epsilon={epsilon})")
    return PreprocessStats(PreprocessKind.ZCA, mu=mean, zca_matrix=whitening, epsilon=epsilon)


def zca_apply(stats: PreprocessStats, images: Matrix) -> Matrix:
    """Center rows with the fitted mean and map them through the whitening matrix."""
    if stats.zca_matrix is None:
        raise ContractError(f"Stats of kind {stats.kind.value} are not ZCA stats")
    images = as_matrix(images, "images")
    return (images - stats.mu) @ stats.zca_matrix


def apply_stats(stats: PreprocessStats, other: Dataset) -> Dataset:
    """Apply frozen stats to another dataset, leaving labels and targets alone."""
    if stats.kind is PreprocessKind.STANDARDIZE:
        features = standardize_columns(other.features, stats.mu, stats.sigma, stats.epsilon)
    elif stats.kind is PreprocessKind.GCN:
        features = gcn(other.features, stats.epsilon)
    else:
        features = zca_apply(stats, other.features)
    return other.with_features(features)


def apply_pipeline(pipeline: Sequence[PreprocessStats], dataset: Dataset) -> Dataset:
    """Apply every stats entry in order."""
    for stats in pipeline:
        dataset = apply_stats(stats, dataset)
    return dataset


def fit_gcn_zca(
    train: Dataset,
    epsilon: float = NumericDefaults.ZCA_EPSILON,
    extra: Optional[Matrix] = None,
) -> Tuple[Dataset, List[PreprocessStats]]:
    """
    GCN followed by ZCA, fit on the training features.

    Args:
        train: Training dataset.
        epsilon: ZCA regularizer.
        extra: Additional (e.g. unlabeled transfer pool) rows to include in
            the ZCA fit; the transform is still applied to ``train`` only.

    Returns:
        Tuple of (transformed training set, ``[gcn stats, zca stats]``).
    """
    gcn_stats = PreprocessStats(PreprocessKind.GCN)
    normalized = gcn(train.features)
    fit_rows = normalized if extra is None or extra.shape[0] == 0 else np.vstack([normalized, gcn(extra)])
    zca_stats = zca_fit(fit_rows, epsilon)
    pipeline = [gcn_stats, zca_stats]
    return train.with_features(zca_apply(zca_stats, normalized)), pipeline


def stats_to_bytes(pipeline: Sequence[PreprocessStats]) -> bytes:
    """Serialize a preprocessing pipeline to the ``SMPS`` container."""
    writer = BinaryWriter(ModelFormat.STATS_MAGIC, ModelFormat.VERSION)
    writer.u32(len(pipeline))
    for stats in pipeline:
        writer.u32(_KIND_TAGS[stats.kind])
        writer.f64(stats.epsilon)
        writer.shaped_array(stats.mu)
        writer.shaped_array(stats.sigma)
        writer.u32(int(stats.zca_matrix is not None))
        if stats.zca_matrix is not None:
            writer.shaped_array(stats.zca_matrix)
    return writer.getvalue()


def stats_from_bytes(payload: bytes) -> List[PreprocessStats]:
    """
    Deserialize a preprocessing pipeline.

    Raises:
        SerializationError: On a malformed container.
    """
    reader = BinaryReader(payload, ModelFormat.STATS_MAGIC, ModelFormat.VERSION)
    pipeline: List[PreprocessStats] = []
    for _ in range(reader.u32()):
        tag = reader.u32()
        if tag not in _TAG_KINDS:
            raise SerializationError(f"Unknown preprocessing tag {tag}")
        epsilon = reader.f64()
        mu = reader.shaped_array()
        sigma = reader.shaped_array()
        zca = reader.shaped_array() if reader.u32() else None
        try:
            pipeline.append(PreprocessStats(_TAG_KINDS[tag], mu, sigma, zca, epsilon))
        except ContractError as e:
            raise SerializationError(f"Inconsistent preprocessing entry: {e}") from e
    reader.expect_end()
    return pipeline


def save_stats(pipeline: Sequence[PreprocessStats], path: Path) -> Path:
    """Write a preprocessing sidecar file."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(stats_to_bytes(pipeline))
    logger.info(f"Saved {len(pipeline)} preprocessing step(s) to {path}")
    return path


def load_stats(path: Path) -> List[PreprocessStats]:
    """Read a preprocessing sidecar file."""
    validate_file_exists(path)
    return stats_from_bytes(path.read_bytes())
