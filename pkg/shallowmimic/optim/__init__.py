"""
Optimization for shallowmimic.

This package provides the training configuration, the heavy-ball SGD
update and the training/evaluation loop.
"""

from shallowmimic.optim.config import MetricsRecord, TrainConfig
from shallowmimic.optim.sgd import apply_momentum_step, sgd_momentum_step, zero_velocity
from shallowmimic.optim.trainer import confusion_matrix, evaluate, predict, train

__all__ = [
    "MetricsRecord",
    "TrainConfig",
    "apply_momentum_step",
    "sgd_momentum_step",
    "zero_velocity",
    "confusion_matrix",
    "evaluate",
    "predict",
    "train",
]
