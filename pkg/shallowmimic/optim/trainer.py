"""
Minibatch training loop and evaluation.

``train`` runs seeded minibatch SGD with momentum over a Dataset with
either hard labels or soft targets and records one MetricsRecord per
epoch. Dev metrics are always computed against dev hard labels from
raw-logit predictions: when the soft targets were normalized, student
outputs are denormalized with the training set's LogitScale first.
"""

import logging
import time
from typing import Callable, List, Optional, Tuple

import numpy as np
import numpy.typing as npt
from tqdm import tqdm

from shallowmimic.data.dataset import Dataset, LogitScale
from shallowmimic.exceptions import ConfigurationError, ContractError, NumericError, ShapeError
from shallowmimic.losses.objectives import compute_loss, requires_soft_targets, xent_softmax
from shallowmimic.nn.network import Model
from shallowmimic.nn.propagation import Mode, backward, forward, predict_logits
from shallowmimic.numerics.matrix import Matrix
from shallowmimic.numerics.rng import RngStream
from shallowmimic.optim.config import MetricsRecord, TrainConfig
from shallowmimic.optim.sgd import apply_momentum_step, zero_velocity

logger = logging.getLogger(__name__)

EpochCallback = Callable[[int, Model, MetricsRecord], None]

# child stream ids of the run seed
SHUFFLE_STREAM = 0
DROPOUT_STREAM = 1


def _check_compatible(model: Model, train_set: Dataset, dev_set: Dataset, config: TrainConfig) -> None:
    if requires_soft_targets(config.loss):
        if train_set.soft_targets is None:
            raise ConfigurationError(
                f"Loss '{config.loss.value}' needs soft targets but the training set has none"
            )
    elif train_set.hard_labels is None:
        raise ConfigurationError("Cross-entropy training needs hard labels")

    if dev_set.hard_labels is None:
        raise ConfigurationError("The dev set needs hard labels for error-rate reporting")

    for name, dataset in (("training", train_set), ("dev", dev_set)):
        if dataset.dim != model.spec.input_dim:
            raise ShapeError(
                f"{name} features have width {dataset.dim}, network expects {model.spec.input_dim}"
            )
        if dataset.class_count != model.spec.output_dim:
            raise ShapeError(
                f"{name} set has {dataset.class_count} classes, network outputs {model.spec.output_dim}"
            )

    if len(train_set) == 0:
        raise ContractError("Training set is empty")


def predict(model: Model, features: Matrix, logit_scale: Optional[LogitScale] = None) -> Matrix:
    """Eval-mode logits, mapped back to raw logit space when a scale is given."""
    logits = predict_logits(model, features)
    return logits if logit_scale is None else logit_scale.denormalize(logits)


def _require_eval_labels(dataset: Dataset) -> npt.NDArray[np.int64]:
    labels = dataset.require_labels()
    if labels.shape[0] == 0:
        raise ContractError("Cannot evaluate on an empty dataset")
    return labels


def evaluate(model: Model, dataset: Dataset, logit_scale: Optional[LogitScale] = None) -> float:
    """
    Classification error rate.

    Args:
        model: Model to evaluate (eval mode, no dropout).
        dataset: Dataset with hard labels.
        logit_scale: Statistics to denormalize predictions of a student
            trained on normalized targets.

    Returns:
        Fraction of rows whose argmax logit differs from the label; ties go
        to the lowest class index.

    Raises:
        ContractError: If the dataset has no labels or no rows.
    """
    labels = _require_eval_labels(dataset)
    predicted = np.argmax(predict(model, dataset.features, logit_scale), axis=1)
    return float(np.mean(predicted != labels))


def confusion_matrix(
    model: Model, dataset: Dataset, logit_scale: Optional[LogitScale] = None
) -> npt.NDArray[np.int64]:
    """
    Per-class prediction counts.

    Returns:
        C x C integer matrix; entry ``[i, j]`` counts rows of true class
        ``i`` predicted as class ``j``. Row sums are per-class counts.
    """
    labels = _require_eval_labels(dataset)
    predicted = np.argmax(predict(model, dataset.features, logit_scale), axis=1)
    counts = np.zeros((dataset.class_count, dataset.class_count), dtype=np.int64)
    np.add.at(counts, (labels, predicted), 1)
    return counts


def _dev_metrics(model: Model, dev_set: Dataset, logit_scale: Optional[LogitScale]) -> Tuple[float, float]:
    labels = dev_set.require_labels()
    if labels.shape[0] == 0:
        return 0.0, 0.0
    logits = predict(model, dev_set.features, logit_scale)
    loss, _ = xent_softmax(logits, labels)
    error = float(np.mean(np.argmax(logits, axis=1) != labels))
    return loss, error


def train(
    model: Model,
    train_set: Dataset,
    dev_set: Dataset,
    config: TrainConfig,
    logit_scale: Optional[LogitScale] = None,
    progress: bool = False,
    on_epoch_end: Optional[EpochCallback] = None,
) -> Tuple[Model, List[MetricsRecord]]:
    """
    Train a model with minibatch SGD and momentum.

    Args:
        model: Initial model; it is not modified.
        train_set: Rows with hard labels (cross-entropy) or soft targets
            (mimic losses).
        dev_set: Rows with hard labels for dev loss and error rate.
        config: Hyperparameters, objective and seed.
        logit_scale: Denormalization for dev metrics; defaults to the
            training set's own scale.
        progress: Show a tqdm progress bar over epochs.
        on_epoch_end: Called with ``(epoch, model, record)`` after every
            epoch, e.g. to snapshot checkpoints.

    Returns:
        Tuple of (trained model, one MetricsRecord per completed epoch).
        With early stopping the dev-best model is returned.

    Raises:
        ConfigurationError: If the targets do not fit the loss; raised
            before any training.
        ShapeError: If data and network dimensions disagree.
        NumericError: If the training loss becomes NaN or infinite.
    """
    _check_compatible(model, train_set, dev_set, config)
    if config.max_epochs == 0:
        return model, []

    scale = logit_scale if logit_scale is not None else train_set.logit_scale
    root = RngStream(config.seed)
    shuffle_rng = root.spawn(SHUFFLE_STREAM)
    dropout_rng = root.spawn(DROPOUT_STREAM)

    n = len(train_set)
    labels = train_set.hard_labels
    targets = train_set.soft_targets
    params = list(model.params)
    velocity = zero_velocity(params)
    size = model.size()

    current = model
    best_model = model
    best_error = np.inf
    since_best = 0
    history: List[MetricsRecord] = []
    started = time.perf_counter()

    logger.info(
        f"Training {size:,} parameters on {n} rows for up to {config.max_epochs} epochs "
        f"(loss={config.loss.value}, lr={config.learning_rate}, batch={config.batch_size}, seed={config.seed})"
    )

    epochs = tqdm(range(1, config.max_epochs + 1), desc="Training", disable=not progress, leave=False)
    for epoch in epochs:
        lr = config.learning_rate * config.lr_decay ** (epoch - 1)
        order = shuffle_rng.permutation(n) if config.shuffle else np.arange(n)
        total_loss = 0.0

        for start in range(0, n, config.batch_size):
            rows = order[start : start + config.batch_size]
            step_model = model.with_params(params)
            logits, cache = forward(step_model, train_set.features[rows], Mode.TRAIN, dropout_rng)
            loss, dlogits = compute_loss(
                config.loss,
                logits,
                labels=None if labels is None else labels[rows],
                targets=None if targets is None else targets[rows],
            )
            if not np.isfinite(loss):
                raise NumericError(
                    f"Training diverged at epoch {epoch} (loss={loss}); lower the learning rate"
                )
            grads = backward(step_model, cache, dlogits)
            params, velocity = apply_momentum_step(params, grads, velocity, lr, config.momentum)
            total_loss += loss * rows.shape[0]

        current = model.with_params(params)
        dev_loss, dev_error = _dev_metrics(current, dev_set, scale)
        elapsed = time.perf_counter() - started if config.record_wall_time else 0.0
        record = MetricsRecord(epoch, total_loss / n, dev_loss, dev_error, elapsed, size)
        history.append(record)
        logger.info(str(record))
        epochs.set_postfix(loss=f"{record.train_loss:.4f}", dev_error=f"{dev_error:.4f}")

        if on_epoch_end is not None:
            on_epoch_end(epoch, current, record)

        if config.early_stop_patience is not None:
            if dev_error < best_error:
                best_error, best_model, since_best = dev_error, current, 0
            else:
                since_best += 1
                if since_best >= config.early_stop_patience:
                    logger.warning(
                        f"Early stopping at epoch {epoch}: no dev improvement for "
                        f"{since_best} epoch(s), best dev_error={best_error:.4f}"
                    )
                    break

    return (best_model if config.early_stop_patience is not None else current), history
