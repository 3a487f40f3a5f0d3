"""
Input validation utilities for shallowmimic.

This module provides validation functions for file paths, scalar
hyperparameters, seeds and class labels.
"""

import logging
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from shallowmimic.exceptions import ConfigurationError, DataError, DomainError
from shallowmimic.utils.constants import NumericDefaults

logger = logging.getLogger(__name__)


def validate_file_exists(file_path: Path) -> None:
    """
    Validate that a file exists and is a regular file.

    Args:
        file_path: Path to the file to validate.

    Raises:
        DataError: If the file doesn't exist or is not a regular file.
    """
    if not file_path.exists():
        logger.error(f"File not found: {file_path}")
        raise DataError(f"Input file not found: {file_path}")

    if not file_path.is_file():
        logger.error(f"Path is not a file: {file_path}")
        raise DataError(f"Path is not a regular file: {file_path}")

    logger.debug(f"File validation passed: {file_path}")


def validate_file_format(file_path: Path, extensions: Iterable[str]) -> None:
    """
    Validate that the file has one of the given extensions.

    Args:
        file_path: Path to the file to validate.
        extensions: Accepted lower-case suffixes, including the dot.

    Raises:
        ConfigurationError: If the file extension is not accepted.
    """
    accepted = set(extensions)
    extension = file_path.suffix.lower()

    if extension not in accepted:
        logger.error(f"Unsupported file format: {extension}")
        raise ConfigurationError(
            f"Unsupported file format: {extension or '<none>'} for {file_path}. "
            f"Supported formats: {', '.join(sorted(accepted))}"
        )


def validate_output_dir(output_dir: Path) -> Path:
    """
    Make sure an output directory exists and return its resolved path.

    Args:
        output_dir: Directory that will receive experiment outputs.

    Returns:
        The resolved directory path.

    Raises:
        ConfigurationError: If the path exists but is not a directory.
    """
    resolved = output_dir.resolve()
    if resolved.exists() and not resolved.is_dir():
        raise ConfigurationError(f"Output path is not a directory: {output_dir}")

    if not resolved.exists():
        resolved.mkdir(parents=True, exist_ok=True)
        logger.info(f"Created output directory: {resolved}")

    return resolved


def validate_positive(name: str, value: float) -> None:
    """
    Validate that a hyperparameter is strictly positive.

    Raises:
        ConfigurationError: If the value is not > 0.
    """
    if not value > 0:
        raise ConfigurationError(f"{name} must be positive. Got: {value}")


def validate_fraction(
    name: str, value: float, low: float = 0.0, high: float = 1.0, closed_high: bool = False
) -> None:
    """
    Validate that a value lies in [low, high) or [low, high].

    Raises:
        ConfigurationError: If the value is out of range.
    """
    upper_ok = value <= high if closed_high else value < high
    if not (low <= value and upper_ok):
        bracket = "]" if closed_high else ")"
        raise ConfigurationError(
            f"{name} must be in [{low}, {high}{bracket}. Got: {value}"
        )


def validate_seed(seed: int) -> None:
    """
    Validate that a seed fits in an unsigned 64-bit integer.

    Raises:
        ConfigurationError: If the seed is negative or too large.
    """
    if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
        raise ConfigurationError(f"Seed must be an integer. Got: {seed!r}")

    if not 0 <= int(seed) <= NumericDefaults.MAX_SEED:
        raise ConfigurationError(f"Seed must be an unsigned 64-bit integer. Got: {seed}")


def validate_labels(
    labels: np.ndarray, class_count: int, row_offset: Optional[int] = None
) -> None:
    """
    Validate that class labels are integers in [0, class_count).

    Args:
        labels: One-dimensional label array.
        class_count: Number of classes C.
        row_offset: When given, error messages report 1-based row numbers
            shifted by this offset (used by the CSV reader).

    Raises:
        DomainError: If a label is out of range.
    """
    if labels.ndim != 1:
        raise DomainError(f"Labels must be one-dimensional. Got shape {labels.shape}")

    if labels.size == 0:
        return

    bad = np.flatnonzero((labels < 0) | (labels >= class_count))
    if bad.size:
        index = int(bad[0])
        where = f"row {index + row_offset}" if row_offset is not None else f"index {index}"
        raise DomainError(
            f"Label {int(labels[index])} at {where} is outside [0, {class_count})"
        )
