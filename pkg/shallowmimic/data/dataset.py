"""
Dataset container.

A Dataset bundles a feature matrix with optional hard labels and optional
soft targets (teacher logits). When the soft targets were normalized, the
per-column (mu, sigma) used travel with the dataset as a LogitScale so
student predictions can be mapped back to raw logit space.
"""

import logging
from dataclasses import dataclass, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np
import numpy.typing as npt

from shallowmimic.exceptions import ContractError, SerializationError, ShapeError
from shallowmimic.numerics.matrix import Matrix, Vector, as_matrix, shape_of
from shallowmimic.utils.validators import validate_labels

logger = logging.getLogger(__name__)

Labels = npt.NDArray[np.int64]


@dataclass(frozen=True)
class LogitScale:
    """Per-column affine map between normalized and raw logits."""

    mu: Vector
    sigma: Vector

    def denormalize(self, normalized: Matrix) -> Matrix:
        """Map normalized predictions back to raw logits: ``z = sigma * g + mu``."""
        if normalized.shape[-1] != self.mu.shape[0]:
            raise ShapeError(
                f"Cannot denormalize {shape_of(normalized)} with {self.mu.shape[0]} columns of stats"
            )
        return normalized * self.sigma + self.mu

    def to_dict(self) -> Dict[str, Any]:
        return {"mu": [float(v) for v in self.mu], "sigma": [float(v) for v in self.sigma]}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "LogitScale":
        try:
            mu = np.array([float(v) for v in data["mu"]], dtype=np.float64)
            sigma = np.array([float(v) for v in data["sigma"]], dtype=np.float64)
        except (KeyError, TypeError, ValueError) as e:
            raise SerializationError(f"Invalid logit scale: {e}") from e
        if mu.shape != sigma.shape:
            raise SerializationError(f"Logit scale has {mu.size} means but {sigma.size} deviations")
        return cls(mu, sigma)


@dataclass(frozen=True)
class Dataset:
    """Features plus hard labels and/or soft targets.

    Attributes:
        features: N x D feature matrix (flat rows, also for image data).
        class_count: Number of classes C.
        hard_labels: Optional N class indices in [0, C).
        soft_targets: Optional N x C teacher logits, raw or normalized.
        input_shape: Optional ``(channels, h, w)`` for image data.
        logit_scale: Normalization statistics when soft targets are
            normalized, else None.
    """

    features: Matrix
    class_count: int
    hard_labels: Optional[Labels] = None
    soft_targets: Optional[Matrix] = None
    input_shape: Optional[Tuple[int, int, int]] = None
    logit_scale: Optional[LogitScale] = None

    def __post_init__(self) -> None:
        features = as_matrix(self.features, "features")
        object.__setattr__(self, "features", features)
        n, d = features.shape

        if self.class_count < 1:
            raise ShapeError(f"class_count must be positive. Got {self.class_count}")

        if self.hard_labels is not None:
            labels = np.asarray(self.hard_labels, dtype=np.int64)
            if labels.shape != (n,):
                raise ShapeError(f"{labels.shape[0]} labels for {n} feature rows")
            validate_labels(labels, self.class_count)
            object.__setattr__(self, "hard_labels", labels)

        if self.soft_targets is not None:
            targets = as_matrix(self.soft_targets, "soft_targets")
            if targets.shape != (n, self.class_count):
                raise ShapeError(
                    f"Soft targets of shape {shape_of(targets)}, expected {n}x{self.class_count}"
                )
            object.__setattr__(self, "soft_targets", targets)

        if self.input_shape is not None:
            shape = tuple(int(s) for s in self.input_shape)
            if len(shape) != 3 or int(np.prod(shape)) != d:
                raise ShapeError(f"Image shape {shape} does not match feature width {d}")
            object.__setattr__(self, "input_shape", shape)

    def __len__(self) -> int:
        return int(self.features.shape[0])

    @property
    def dim(self) -> int:
        return int(self.features.shape[1])

    @property
    def feature_shape(self) -> Tuple[int, ...]:
        """Network input shape: the image shape if set, else ``(D,)``."""
        return self.input_shape if self.input_shape is not None else (self.dim,)

    def require_labels(self) -> Labels:
        """
        Return the hard labels.

        Raises:
            ContractError: If the dataset has none.
        """
        if self.hard_labels is None:
            raise ContractError("Dataset has no hard labels")
        return self.hard_labels

    def require_targets(self) -> Matrix:
        """
        Return the soft targets.

        Raises:
            ContractError: If the dataset has none.
        """
        if self.soft_targets is None:
            raise ContractError("Dataset has no soft targets")
        return self.soft_targets

    def subset(self, indices: npt.NDArray[np.int64]) -> "Dataset":
        """Rows selected by ``indices``, in that order."""
        return replace(
            self,
            features=self.features[indices],
            hard_labels=None if self.hard_labels is None else self.hard_labels[indices],
            soft_targets=None if self.soft_targets is None else self.soft_targets[indices],
        )

    def with_features(self, features: Matrix) -> "Dataset":
        """Same labels and targets over transformed features."""
        return replace(self, features=features)

    def __str__(self) -> str:
        parts = [f"N={len(self)}", f"D={self.dim}", f"C={self.class_count}"]
        if self.hard_labels is not None:
            parts.append("labels")
        if self.soft_targets is not None:
            parts.append("normalized targets" if self.logit_scale else "targets")
        return f"Dataset({', '.join(parts)})"
