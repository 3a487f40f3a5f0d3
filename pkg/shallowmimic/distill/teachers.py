"""
Teacher logit extraction.

A teacher is a single Model or an ensemble of Models. The regression
target for a row is the teacher's pre-softmax output; for an ensemble it
is the elementwise mean of the members' logits.
"""

import logging
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from shallowmimic.exceptions import ContractError, ShapeError
from shallowmimic.nn.network import Model
from shallowmimic.nn.propagation import predict_logits
from shallowmimic.numerics.matrix import Matrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleModel:
    """A nonempty group of teachers sharing input and output widths."""

    members: Tuple[Model, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ContractError("An ensemble needs at least one member")
        first = self.members[0].spec
        for index, member in enumerate(self.members[1:], start=1):
            if member.spec.output_dim != first.output_dim or member.spec.input_dim != first.input_dim:
                raise ShapeError(
                    f"Ensemble member {index} maps {member.spec.input_dim}->{member.spec.output_dim}, "
                    f"member 0 maps {first.input_dim}->{first.output_dim}"
                )

    def __len__(self) -> int:
        return len(self.members)

    @property
    def output_dim(self) -> int:
        return self.members[0].spec.output_dim

    @property
    def input_dim(self) -> int:
        return self.members[0].spec.input_dim


Teacher = Union[Model, EnsembleModel]


def extract_logits(teacher: Model, features: Matrix) -> Matrix:
    """
    Eval-mode logits of a single teacher.

    Args:
        teacher: Trained model.
        features: N x D rows; row ``i`` of the result belongs to row ``i``.

    Raises:
        ShapeError: If the feature width does not match the teacher input.
    """
    return predict_logits(teacher, features)


def ensemble_logits(ensemble: EnsembleModel, features: Matrix) -> Matrix:
    """
    Mean logits of the ensemble members.

    Raises:
        ContractError: If the ensemble has no members.
    """
    if not ensemble.members:
        raise ContractError("Cannot average logits of an empty ensemble")
    stacked = np.stack([extract_logits(member, features) for member in ensemble.members])
    logger.debug(f"Averaged logits of {len(ensemble)} teacher(s) over {features.shape[0]} rows")
    return stacked.mean(axis=0)


def teacher_logits(teacher: Teacher, features: Matrix) -> Matrix:
    """Logits of a single teacher or the averaged logits of an ensemble."""
    if isinstance(teacher, EnsembleModel):
        return ensemble_logits(teacher, features)
    return extract_logits(teacher, features)


def teacher_output_dim(teacher: Teacher) -> int:
    return teacher.output_dim if isinstance(teacher, EnsembleModel) else teacher.spec.output_dim


def teacher_input_dim(teacher: Teacher) -> int:
    return teacher.input_dim if isinstance(teacher, EnsembleModel) else teacher.spec.input_dim
