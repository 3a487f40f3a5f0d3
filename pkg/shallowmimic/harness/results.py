"""
Experiment results and CSV writers.

Sweep rows and per-epoch metrics are written as plain CSV with a fixed
header; reals use the shortest round-trip representation so that reruns
with the same configuration produce byte-identical files.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import spearmanr

from shallowmimic.exceptions import ShapeError
from shallowmimic.optim.config import MetricsRecord
from shallowmimic.utils.constants import CsvFormat

logger = logging.getLogger(__name__)

DIRECT = "direct"
MIMIC = "mimic"


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


@dataclass(frozen=True)
class SweepRow:
    """One trained model in a sweep."""

    model_id: str
    param_count: int
    hidden_units: str
    regime: str
    dev_error: float
    test_error: Optional[float] = None
    teacher_error: Optional[float] = None

    def to_row(self) -> List[str]:
        return [
            self.model_id,
            str(self.param_count),
            self.hidden_units,
            self.regime,
            _cell(self.dev_error),
            _cell(self.test_error),
            _cell(self.teacher_error),
        ]


@dataclass
class SweepResult:
    """Ordered rows of a parameter or teacher sweep."""

    rows: List[SweepRow] = field(default_factory=list)

    def add(self, row: SweepRow) -> None:
        self.rows.append(row)
        logger.info(
            f"{row.model_id}: params={row.param_count:,} hidden={row.hidden_units} "
            f"regime={row.regime} dev_error={row.dev_error:.4f}"
        )

    def by_regime(self, regime: str) -> List[SweepRow]:
        return [row for row in self.rows if row.regime == regime]

    def write_csv(self, path: Path) -> Path:
        """Write ``model_id,params,hidden_units,regime,dev_error,test_error,teacher_error``."""
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(CsvFormat.SWEEP_HEADER)
            for row in self.rows:
                writer.writerow(row.to_row())
        logger.info(f"Wrote {len(self.rows)} sweep rows to {path}")
        return path


def write_metrics_csv(path: Path, records: Sequence[MetricsRecord]) -> Path:
    """Write per-epoch metrics with the ``epoch,train_loss,...`` header."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(CsvFormat.METRICS_HEADER)
        for record in records:
            writer.writerow(record.to_row())
    logger.debug(f"Wrote {len(records)} metrics rows to {path}")
    return path


def read_metrics_csv(path: Path) -> List[MetricsRecord]:
    """Read a metrics CSV written by ``write_metrics_csv``."""
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        return [
            MetricsRecord(
                epoch=int(row["epoch"]),
                train_loss=float(row["train_loss"]),
                dev_loss=float(row["dev_loss"]),
                dev_error_rate=float(row["dev_error"]),
                elapsed_seconds=float(row["seconds"]),
                param_count=int(row["params"]),
            )
            for row in reader
        ]


def dev_loss_minimum(records: Sequence[MetricsRecord]) -> Tuple[int, float]:
    """
    Locate the dev-loss minimum of a training curve.

    Returns:
        Tuple of (epoch of the first minimum, final dev loss minus the
        minimum). A gap above zero with the minimum before the last epoch
        indicates overfitting. ``(0, 0.0)`` for an empty curve.
    """
    if not records:
        return 0, 0.0
    losses = [record.dev_loss for record in records]
    best = int(np.argmin(losses))
    return records[best].epoch, losses[-1] - losses[best]


def rank_correlation(teacher_errors: Sequence[float], student_errors: Sequence[float]) -> Optional[float]:
    """
    Spearman correlation between teacher and student accuracies.

    Returns:
        The correlation, or None when it is undefined (fewer than two
        points or a constant sequence).
    """
    if len(teacher_errors) != len(student_errors):
        raise ShapeError(
            f"{len(teacher_errors)} teacher errors for {len(student_errors)} student errors"
        )
    if len(teacher_errors) < 2:
        return None
    teacher_accuracy = [1.0 - e for e in teacher_errors]
    student_accuracy = [1.0 - e for e in student_errors]
    if len(set(teacher_accuracy)) < 2 or len(set(student_accuracy)) < 2:
        return None
    result = spearmanr(teacher_accuracy, student_accuracy)
    value = float(result[0])
    return None if math.isnan(value) else value


def write_json(path: Path, payload: Dict[str, Any]) -> Path:
    """Write a JSON summary with sorted keys."""
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    logger.info(f"Wrote {path}")
    return path


def write_confusion_csv(path: Path, counts: np.ndarray) -> Path:
    """Write a confusion matrix; rows are true classes, columns predictions."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["true"] + [f"pred{j}" for j in range(counts.shape[1])])
        for i, row in enumerate(counts):
            writer.writerow([str(i)] + [str(int(v)) for v in row])
    logger.info(f"Wrote confusion matrix to {path}")
    return path
