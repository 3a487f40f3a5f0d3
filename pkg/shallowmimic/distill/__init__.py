"""
Teacher-side distillation pipeline for shallowmimic.

This package provides logit extraction, ensemble averaging, target
normalization and transfer-set construction and persistence.
"""

from shallowmimic.distill.targets import (
    LogitTargets,
    fold_logit_scale,
    normalize_logits,
    raw_targets,
)
from shallowmimic.distill.teachers import (
    EnsembleModel,
    Teacher,
    ensemble_logits,
    extract_logits,
    teacher_logits,
)
from shallowmimic.distill.transfer import (
    TransferHeader,
    build_transfer_set,
    load_transfer_set,
    save_transfer_set,
)

__all__ = [
    "LogitTargets",
    "fold_logit_scale",
    "normalize_logits",
    "raw_targets",
    "EnsembleModel",
    "Teacher",
    "ensemble_logits",
    "extract_logits",
    "teacher_logits",
    "TransferHeader",
    "build_transfer_set",
    "load_transfer_set",
    "save_transfer_set",
]
