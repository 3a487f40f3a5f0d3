"""
Training configuration and telemetry records.
"""

import logging
from dataclasses import asdict, dataclass
from typing import Any, Dict, List, Optional

from shallowmimic.exceptions import ConfigurationError
from shallowmimic.losses.objectives import LossKind
from shallowmimic.utils.constants import TrainDefaults
from shallowmimic.utils.validators import validate_fraction, validate_positive, validate_seed

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one training run.

    Attributes:
        learning_rate: Initial SGD step size (> 0).
        momentum: Heavy-ball momentum in [0, 1).
        batch_size: Minibatch size (>= 1); the last ragged batch is kept.
        max_epochs: Number of passes over the training set (0 is a no-op).
        seed: Seed for shuffling and dropout.
        loss: Training objective.
        early_stop_patience: Epochs without dev-error improvement before
            stopping; None disables early stopping.
        lr_decay: Per-epoch multiplicative learning-rate factor in (0, 1].
        shuffle: Whether to reshuffle the training rows every epoch.
        record_wall_time: Record real elapsed seconds in the metrics;
            otherwise 0.0 is recorded so that reruns are byte-identical.
    """

    learning_rate: float = TrainDefaults.LEARNING_RATE
    momentum: float = TrainDefaults.MOMENTUM
    batch_size: int = TrainDefaults.BATCH_SIZE
    max_epochs: int = TrainDefaults.MAX_EPOCHS
    seed: int = 0
    loss: LossKind = LossKind.CROSS_ENTROPY_HARD
    early_stop_patience: Optional[int] = None
    lr_decay: float = TrainDefaults.LR_DECAY
    shuffle: bool = True
    record_wall_time: bool = False

    def __post_init__(self) -> None:
        validate_positive("learning_rate", self.learning_rate)
        validate_fraction("momentum", self.momentum)
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be at least 1. Got: {self.batch_size}")
        if self.max_epochs < 0:
            raise ConfigurationError(f"max_epochs must be non-negative. Got: {self.max_epochs}")
        validate_seed(self.seed)
        if self.early_stop_patience is not None and self.early_stop_patience < 1:
            raise ConfigurationError(
                f"early_stop_patience must be at least 1. Got: {self.early_stop_patience}"
            )
        if not 0.0 < self.lr_decay <= 1.0:
            raise ConfigurationError(f"lr_decay must be in (0, 1]. Got: {self.lr_decay}")
        object.__setattr__(self, "loss", LossKind(self.loss))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["loss"] = self.loss.value
        return data


@dataclass(frozen=True)
class MetricsRecord:
    """Telemetry of one training epoch."""

    epoch: int
    train_loss: float
    dev_loss: float
    dev_error_rate: float
    elapsed_seconds: float
    param_count: int

    def to_row(self) -> List[str]:
        """CSV cells in ``epoch,train_loss,dev_loss,dev_error,seconds,params`` order."""
        return [
            str(self.epoch),
            repr(float(self.train_loss)),
            repr(float(self.dev_loss)),
            repr(float(self.dev_error_rate)),
            repr(float(self.elapsed_seconds)),
            str(self.param_count),
        ]

    def __str__(self) -> str:
        return (
            f"epoch {self.epoch}: train_loss={self.train_loss:.4f} "
            f"dev_loss={self.dev_loss:.4f} dev_error={self.dev_error_rate:.4f}"
        )
