"""
Experiment output directory layout.

    <out>/models/<model_id>.smim      serialized models
    <out>/metrics/<model_id>.csv      per-epoch metrics
    <out>/preprocess.stats            preprocessing pipeline sidecar
    <out>/transfer/                   persisted transfer set
    <out>/<command>.csv|.json         sweep tables and summaries
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from shallowmimic.data.preprocess import PreprocessStats, save_stats
from shallowmimic.harness.results import write_metrics_csv
from shallowmimic.nn.network import Model
from shallowmimic.nn.serialization import save_model
from shallowmimic.optim.config import MetricsRecord
from shallowmimic.utils.constants import MODEL_EXTENSION, STATS_EXTENSION
from shallowmimic.utils.security import sanitize_filename, validate_safe_path
from shallowmimic.utils.validators import validate_output_dir

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Workspace:
    """Output directory of one experiment command."""

    root: Path

    @classmethod
    def create(cls, out_dir: Path) -> "Workspace":
        """
        Validate and create the output directory.

        Raises:
            ConfigurationError: If the path is unsafe or not a directory.
        """
        validate_safe_path(out_dir)
        return cls(validate_output_dir(out_dir))

    def model_path(self, model_id: str) -> Path:
        return self.root / "models" / f"{sanitize_filename(model_id)}{MODEL_EXTENSION}"

    def metrics_path(self, model_id: str) -> Path:
        return self.root / "metrics" / f"{sanitize_filename(model_id)}.csv"

    @property
    def stats_path(self) -> Path:
        return self.root / f"preprocess{STATS_EXTENSION}"

    @property
    def transfer_dir(self) -> Path:
        return self.root / "transfer"

    def table_path(self, name: str, suffix: str = ".csv") -> Path:
        return self.root / f"{sanitize_filename(name)}{suffix}"

    def save_run(self, model_id: str, model: Model, records: Sequence[MetricsRecord]) -> Path:
        """Write a model and its metrics; return the model path."""
        write_metrics_csv(self.metrics_path(model_id), records)
        return save_model(model, self.model_path(model_id))

    def save_pipeline(self, pipeline: Sequence[PreprocessStats]) -> None:
        if pipeline:
            save_stats(pipeline, self.stats_path)
