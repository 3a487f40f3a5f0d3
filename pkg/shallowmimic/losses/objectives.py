"""
Training objectives.

Every loss takes B x C student logits plus a target and returns the scalar
batch-mean loss together with its gradient with respect to the student
logits. Cross-entropy uses hard labels; the three mimic losses use soft
targets (teacher logits, raw or normalized).
"""

import logging
from enum import Enum
from typing import Optional, Tuple

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import ConfigurationError, ContractError, ShapeError
from shallowmimic.nn.activations import log_softmax_rows, softmax_rows
from shallowmimic.numerics.matrix import Matrix, shape_of
from shallowmimic.utils.validators import validate_labels

logger = logging.getLogger(__name__)

LossResult = Tuple[float, Matrix]


class LossKind(str, Enum):
    """Training objective."""

    CROSS_ENTROPY_HARD = "xent"
    L2_LOGIT = "l2_logit"
    KL_MIMIC = "kl"
    L2_PROB = "l2_prob"

    @classmethod
    def parse(cls, value: str) -> "LossKind":
        """Look a loss up by its config value or enum name."""
        text = value.strip()
        for kind in cls:
            if text in (kind.value, kind.name, kind.name.lower()):
                return kind
        choices = ", ".join(kind.value for kind in cls)
        raise ConfigurationError(f"Unknown loss '{value}'. Choose one of: {choices}")


def requires_soft_targets(kind: LossKind) -> bool:
    """Whether a loss regresses teacher outputs instead of hard labels."""
    return kind is not LossKind.CROSS_ENTROPY_HARD


def _check_pair(pred: Matrix, target: Matrix) -> None:
    if pred.ndim != 2 or pred.shape != target.shape:
        raise ShapeError(
            f"Prediction of shape {shape_of(pred)} does not match target {shape_of(target)}"
        )


def xent_softmax(logits: Matrix, labels: npt.NDArray[np.int64]) -> LossResult:
    """
    Softmax cross-entropy against hard labels.

    Args:
        logits: B x C raw logits.
        labels: B class indices in [0, C).

    Returns:
        Tuple of (mean negative log-likelihood, ``(softmax - onehot) / B``).

    Raises:
        ShapeError: If labels do not match the batch size.
        DomainError: If a label is out of range.

    Example:
        >>> loss, _ = xent_softmax(np.array([[1.0, 2.0]]), np.array([0]))
        >>> round(loss, 4)
        1.3133
    """
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(
            f"Labels of shape {labels.shape} do not match logits {shape_of(logits)}"
        )
    validate_labels(labels, logits.shape[1])

    size = logits.shape[0]
    rows = np.arange(size)
    log_probs = log_softmax_rows(logits)
    loss = -float(log_probs[rows, labels].sum()) / size

    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    return loss, grad / size


def l2_logit(pred: Matrix, target: Matrix) -> LossResult:
    """
    Logit regression: ``(1/2B) * sum ||pred - target||^2``.

    Example:
        >>> l2_logit(np.array([[1.0, 2.0]]), np.zeros((1, 2)))[0]
        2.5
    """
    _check_pair(pred, target)
    size = pred.shape[0]
    diff = pred - target
    loss = 0.5 * float(np.sum(diff * diff)) / size
    return loss, diff / size


def kl_mimic(student_logits: Matrix, teacher_logits: Matrix) -> LossResult:
    """
    ``KL(p_teacher || p_student)`` averaged over the batch.

    The gradient with respect to the student logits is ``(p_S - p_T) / B``.
    """
    _check_pair(student_logits, teacher_logits)
    size = student_logits.shape[0]
    log_p_teacher = log_softmax_rows(teacher_logits)
    log_p_student = log_softmax_rows(student_logits)
    p_teacher = np.exp(log_p_teacher)

    loss = float(np.sum(p_teacher * (log_p_teacher - log_p_student))) / size
    grad = (np.exp(log_p_student) - p_teacher) / size
    # rounding can leave tiny negatives for identical distributions
    return max(loss, 0.0), grad


def l2_prob(student_logits: Matrix, teacher_logits: Matrix) -> LossResult:
    """
    Squared error between softmax probabilities.

    Gradient through the softmax Jacobian:
    ``dz_k = p_k * (r_k - sum_j r_j p_j) / B`` with ``r = p_S - p_T``.
    """
    _check_pair(student_logits, teacher_logits)
    size = student_logits.shape[0]
    p_student = softmax_rows(student_logits)
    residual = p_student - softmax_rows(teacher_logits)

    loss = 0.5 * float(np.sum(residual * residual)) / size
    inner = np.sum(residual * p_student, axis=1, keepdims=True)
    grad = p_student * (residual - inner) / size
    return loss, grad


def compute_loss(
    kind: LossKind,
    logits: Matrix,
    labels: Optional[npt.NDArray[np.int64]] = None,
    targets: Optional[Matrix] = None,
) -> LossResult:
    """
    Dispatch to the objective named by ``kind``.

    Raises:
        ContractError: If the target type the loss needs is missing.
    """
    if kind is LossKind.CROSS_ENTROPY_HARD:
        if labels is None:
            raise ContractError("Cross-entropy needs hard labels")
        return xent_softmax(logits, labels)

    if targets is None:
        raise ContractError(f"{kind.value} needs soft targets")

    if kind is LossKind.L2_LOGIT:
        return l2_logit(logits, targets)
    if kind is LossKind.KL_MIMIC:
        return kl_mimic(logits, targets)
    return l2_prob(logits, targets)
