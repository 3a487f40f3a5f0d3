"""
CSV dataset ingestion and export.

Datasets are plain UTF-8 CSV files with an optional header row. One column
may hold integer class labels, identified either by header name or by
zero-based index; every other column is a feature. LF and CRLF line
endings are both accepted. Reals are written with Python's shortest
round-trip representation, so save followed by load is bit-exact.
"""

import csv
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

from shallowmimic.data.dataset import Dataset
from shallowmimic.exceptions import DomainError, IngestError
from shallowmimic.numerics.matrix import Matrix
from shallowmimic.utils.constants import CSV_EXTENSIONS, CsvFormat
from shallowmimic.utils.validators import (
    validate_file_exists,
    validate_file_format,
    validate_labels,
)

logger = logging.getLogger(__name__)

LabelColumn = Union[str, int, None]


def format_real(value: float) -> str:
    """Shortest representation that round-trips a 64-bit real."""
    return repr(float(value))


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def _read_rows(path: Path) -> List[List[str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        return [row for row in csv.reader(handle) if row]


def _resolve_label_index(
    label_column: LabelColumn, header: Optional[List[str]], width: int, path: Path
) -> Optional[int]:
    if label_column is None:
        return None

    if isinstance(label_column, str) and not label_column.lstrip("-").isdigit():
        if header is None:
            raise IngestError(f"{path}: label column '{label_column}' given by name but file has no header")
        names = [name.strip() for name in header]
        if label_column not in names:
            raise IngestError(f"{path}: no column named '{label_column}' in header")
        return names.index(label_column)

    index = int(label_column)
    if not 0 <= index < width:
        raise IngestError(f"{path}: label column index {index} out of range for {width} columns")
    return index


def read_matrix_csv(path: Path, has_header: Optional[bool] = None) -> Matrix:
    """
    Read an all-numeric CSV file as a matrix.

    Args:
        path: CSV file.
        has_header: Whether the first row is a header; detected from the
            first row when None.

    Raises:
        IngestError: On ragged rows or unparsable cells (naming the row).
    """
    dataset = load_csv(path, label_column=None, class_count=1, has_header=has_header)
    return dataset.features


def load_csv(
    path: Path,
    label_column: LabelColumn = CsvFormat.LABEL_COLUMN,
    class_count: Optional[int] = None,
    has_header: Optional[bool] = None,
    input_shape: Optional[Sequence[int]] = None,
) -> Dataset:
    """
    Load a dataset from CSV.

    Args:
        path: CSV file to read.
        label_column: Header name or zero-based index of the label column,
            or None for an unlabeled features file.
        class_count: Number of classes C; inferred as ``max(label) + 1``
            when None.
        has_header: Whether the first row is a header; detected when None
            (a first row with any non-numeric cell is a header).
        input_shape: Optional image shape tagged on the dataset.

    Returns:
        Dataset with row order preserved.

    Raises:
        DataError: If the file does not exist.
        ConfigurationError: If the file is not a CSV file.
        IngestError: On ragged rows, unparsable cells or out-of-range
            labels; the message names the 1-based file row.
    """
    validate_file_exists(path)
    validate_file_format(path, CSV_EXTENSIONS)

    rows = _read_rows(path)
    if not rows:
        raise IngestError(f"{path}: file is empty")

    if has_header is None:
        has_header = not all(_is_number(cell) for cell in rows[0])
    header = rows[0] if has_header else None
    body = rows[1:] if has_header else rows
    first_line = 2 if has_header else 1

    width = len(header) if header is not None else (len(body[0]) if body else 0)
    label_index = _resolve_label_index(label_column, header, width, path)

    features: List[List[float]] = []
    labels: List[int] = []
    for offset, row in enumerate(body):
        line = first_line + offset
        if len(row) != width:
            raise IngestError(f"{path}: row {line} has {len(row)} columns, expected {width}")
        try:
            values = [float(cell) for i, cell in enumerate(row) if i != label_index]
            if label_index is not None:
                labels.append(int(row[label_index].strip()))
        except ValueError as e:
            raise IngestError(f"{path}: row {line} has an unparsable cell ({e})") from e
        features.append(values)

    dim = width - (1 if label_index is not None else 0)
    feature_matrix = np.array(features, dtype=np.float64).reshape(len(features), dim)
    if not np.all(np.isfinite(feature_matrix)):
        bad = int(np.flatnonzero(~np.isfinite(feature_matrix).all(axis=1))[0])
        raise IngestError(f"{path}: row {first_line + bad} contains NaN or infinite values")

    label_array = None
    if label_index is not None:
        label_array = np.array(labels, dtype=np.int64)
        if class_count is None:
            class_count = int(label_array.max()) + 1 if label_array.size else 1
        try:
            validate_labels(label_array, class_count, row_offset=first_line)
        except DomainError as e:
            raise IngestError(f"{path}: {e}") from e

    dataset = Dataset(
        features=feature_matrix,
        class_count=class_count if class_count is not None else 1,
        hard_labels=label_array,
        input_shape=tuple(input_shape) if input_shape else None,  # type: ignore[arg-type]
    )
    logger.info(f"Loaded {dataset} from {path}")
    return dataset


def write_matrix_csv(
    path: Path, matrix: Matrix, prefix: str = CsvFormat.FEATURE_PREFIX
) -> Path:
    """Write a matrix with a ``{prefix}0,{prefix}1,...`` header."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow([f"{prefix}{j}" for j in range(matrix.shape[1])])
        for row in matrix:
            writer.writerow([format_real(v) for v in row])
    logger.debug(f"Wrote {matrix.shape[0]} rows to {path}")
    return path


def save_csv(dataset: Dataset, path: Path) -> Path:
    """
    Write features (and labels, if present) to CSV.

    The header is ``x0..x{D-1}`` followed by ``label`` for labeled data.

    Returns:
        The written path.
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    header = [f"{CsvFormat.FEATURE_PREFIX}{j}" for j in range(dataset.dim)]
    labels = dataset.hard_labels
    if labels is not None:
        header.append(CsvFormat.LABEL_COLUMN)

    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for i, row in enumerate(dataset.features):
            cells = [format_real(v) for v in row]
            if labels is not None:
                cells.append(str(int(labels[i])))
            writer.writerow(cells)

    logger.info(f"Saved {dataset} to {path}")
    return path
