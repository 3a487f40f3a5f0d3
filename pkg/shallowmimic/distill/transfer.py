"""
Transfer-set construction and persistence.

A transfer set is the labeled training features (labels dropped) plus any
unlabeled pool, each row scored by the teacher. On disk it is a directory
holding a features CSV, a targets CSV and a JSON header with the class
count, the normalization flag and statistics and the teacher fingerprint.
"""

import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from shallowmimic.data.csv_io import read_matrix_csv, write_matrix_csv
from shallowmimic.data.dataset import Dataset, LogitScale
from shallowmimic.distill.targets import normalize_logits, raw_targets
from shallowmimic.distill.teachers import (
    Teacher,
    teacher_input_dim,
    teacher_logits,
    teacher_output_dim,
)
from shallowmimic.exceptions import SerializationError, ShapeError
from shallowmimic.numerics.matrix import Matrix, as_matrix, shape_of
from shallowmimic.utils.constants import CsvFormat, TransferFormat
from shallowmimic.utils.validators import validate_file_exists

logger = logging.getLogger(__name__)


def build_transfer_set(
    labeled: Dataset,
    unlabeled_features: Matrix,
    teacher: Teacher,
    normalize: bool,
) -> Dataset:
    """
    Score labeled and unlabeled rows with the teacher.

    Args:
        labeled: Training set; its hard labels are discarded.
        unlabeled_features: Extra rows (may have zero rows).
        teacher: Single model or ensemble producing the targets.
        normalize: Standardize the logit columns across the transfer set.

    Returns:
        Dataset of ``len(labeled) + len(unlabeled)`` rows whose soft
        targets are the (possibly normalized) teacher logits and which
        carries no hard labels. When normalized, ``logit_scale`` holds the
        statistics for denormalizing student predictions.

    Raises:
        ShapeError: If feature widths or class counts disagree.
    """
    unlabeled = as_matrix(unlabeled_features, "unlabeled features")
    if unlabeled.shape[0] and unlabeled.shape[1] != labeled.dim:
        raise ShapeError(
            f"Unlabeled features {shape_of(unlabeled)} do not match labeled width {labeled.dim}"
        )
    if teacher_input_dim(teacher) != labeled.dim:
        raise ShapeError(
            f"Teacher expects width {teacher_input_dim(teacher)}, data has width {labeled.dim}"
        )
    if teacher_output_dim(teacher) != labeled.class_count:
        raise ShapeError(
            f"Teacher outputs {teacher_output_dim(teacher)} classes, data has {labeled.class_count}"
        )

    features = labeled.features
    if unlabeled.shape[0]:
        features = np.vstack([labeled.features, unlabeled])

    logits = teacher_logits(teacher, features)
    targets = normalize_logits(logits) if normalize and features.shape[0] else raw_targets(logits)

    transfer = Dataset(
        features=features,
        class_count=labeled.class_count,
        soft_targets=targets.logits,
        input_shape=labeled.input_shape,
        logit_scale=targets.scale if targets.normalized else None,
    )
    logger.info(
        f"Built transfer set: {len(labeled)} relabeled + {unlabeled.shape[0]} unlabeled rows "
        f"(normalized={targets.normalized})"
    )
    return transfer


@dataclass(frozen=True)
class TransferHeader:
    """Metadata stored next to a persisted transfer set.

    Attributes:
        class_count: Number of logit columns.
        normalized: Whether the targets file holds normalized logits.
        mu: Column means of the raw teacher logits.
        sigma: Column population standard deviations of the raw teacher
            logits, without the epsilon floor.
        teacher_sha256: Fingerprint of the teacher model(s).
        rows: Number of transfer rows.
        input_shape: Image shape of the features, if any.
        scale: Denormalization map (floored sigma) when normalized.
        version: Header format version.
    """

    class_count: int
    normalized: bool
    mu: List[float]
    sigma: List[float]
    teacher_sha256: str
    rows: int
    input_shape: Optional[List[int]] = None
    scale: Optional[Dict[str, List[float]]] = None
    version: int = TransferFormat.HEADER_VERSION

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TransferHeader":
        try:
            header = cls(
                class_count=int(data["class_count"]),
                normalized=bool(data["normalized"]),
                mu=[float(v) for v in data["mu"]],
                sigma=[float(v) for v in data["sigma"]],
                teacher_sha256=str(data["teacher_sha256"]),
                rows=int(data["rows"]),
                input_shape=data.get("input_shape"),
                scale=data.get("scale"),
                version=int(data.get("version", TransferFormat.HEADER_VERSION)),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"Invalid transfer-set header: {e}") from e
        if header.version != TransferFormat.HEADER_VERSION:
            raise SerializationError(f"Unsupported transfer-set header version {header.version}")
        if header.normalized and header.scale is None:
            raise SerializationError("Normalized transfer-set header has no scale")
        return header


def _raw_logits(dataset: Dataset) -> Matrix:
    targets = dataset.require_targets()
    if dataset.logit_scale is None:
        return targets
    return dataset.logit_scale.denormalize(targets)


def save_transfer_set(transfer: Dataset, directory: Path, teacher_sha256: str) -> Path:
    """
    Persist a transfer set into ``directory``.

    Returns:
        The directory path.
    """
    directory.mkdir(parents=True, exist_ok=True)
    raw = raw_targets(_raw_logits(transfer))
    write_matrix_csv(directory / TransferFormat.FEATURES_FILE, transfer.features, CsvFormat.FEATURE_PREFIX)
    write_matrix_csv(directory / TransferFormat.TARGETS_FILE, transfer.require_targets(), CsvFormat.TARGET_PREFIX)

    header = TransferHeader(
        class_count=transfer.class_count,
        normalized=transfer.logit_scale is not None,
        mu=[float(v) for v in raw.mu],
        sigma=[float(v) for v in raw.sigma],
        teacher_sha256=teacher_sha256,
        rows=len(transfer),
        input_shape=list(transfer.input_shape) if transfer.input_shape else None,
        scale=transfer.logit_scale.to_dict() if transfer.logit_scale is not None else None,
    )
    header_path = directory / TransferFormat.HEADER_FILE
    header_path.write_text(json.dumps(header.to_dict(), indent=2) + "\n", encoding="utf-8")

    logger.info(f"Saved transfer set ({len(transfer)} rows) to {directory}")
    return directory


def load_transfer_set(directory: Path) -> Tuple[Dataset, TransferHeader]:
    """
    Load a transfer set written by ``save_transfer_set``.

    Returns:
        Tuple of (soft-target dataset, header).

    Raises:
        DataError: If a file is missing.
        SerializationError: If the header is invalid or disagrees with the
            CSV contents.
    """
    header_path = directory / TransferFormat.HEADER_FILE
    validate_file_exists(header_path)
    try:
        header = TransferHeader.from_dict(json.loads(header_path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise SerializationError(f"Invalid JSON in {header_path}: {e}") from e

    features = read_matrix_csv(directory / TransferFormat.FEATURES_FILE, has_header=True)
    targets = read_matrix_csv(directory / TransferFormat.TARGETS_FILE, has_header=True)
    if features.shape[0] != header.rows or targets.shape != (header.rows, header.class_count):
        raise SerializationError(
            f"Transfer files in {directory} do not match the header "
            f"({header.rows} rows x {header.class_count} classes)"
        )

    scale = LogitScale.from_dict(header.scale) if header.normalized and header.scale else None
    if scale is not None and scale.mu.shape != (header.class_count,):
        raise SerializationError(
            f"Transfer-set scale has {scale.mu.size} columns, header has {header.class_count}"
        )
    dataset = Dataset(
        features=features,
        class_count=header.class_count,
        soft_targets=targets,
        input_shape=tuple(header.input_shape) if header.input_shape else None,  # type: ignore[arg-type]
        logit_scale=scale,
    )
    logger.info(f"Loaded transfer set {dataset} from {directory}")
    return dataset, header
