"""
Training objectives for shallowmimic.

Hard-label cross-entropy and the three mimic losses: logit regression,
KL divergence and squared probability error.
"""

from shallowmimic.losses.objectives import (
    LossKind,
    compute_loss,
    kl_mimic,
    l2_logit,
    l2_prob,
    requires_soft_targets,
    xent_softmax,
)

__all__ = [
    "LossKind",
    "compute_loss",
    "kl_mimic",
    "l2_logit",
    "l2_prob",
    "requires_soft_targets",
    "xent_softmax",
]
