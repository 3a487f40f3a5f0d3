"""
Experiment commands.

Each ``cmd_*`` function runs one experiment described by an
ExperimentConfig and writes its artifacts into a Workspace. Commands are
deterministic given the configuration and seed list: data come from
``synth_seed`` (or CSV files), and every run seed drives its own
initialization, shuffling, dropout and bootstrap streams.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from shallowmimic.data.csv_io import load_csv, read_matrix_csv
from shallowmimic.data.dataset import Dataset
from shallowmimic.data.preprocess import (
    PreprocessStats,
    apply_pipeline,
    fit_gcn_zca,
    load_stats,
    standardize,
)
from shallowmimic.data.splits import bootstrap
from shallowmimic.data.synthetic import make_synthetic
from shallowmimic.distill.targets import fold_logit_scale
from shallowmimic.distill.teachers import (
    EnsembleModel,
    Teacher,
    teacher_input_dim,
    teacher_logits,
)
from shallowmimic.distill.transfer import build_transfer_set, save_transfer_set
from shallowmimic.exceptions import ConfigurationError
from shallowmimic.harness.config import ExperimentConfig
from shallowmimic.harness.results import (
    DIRECT,
    MIMIC,
    SweepResult,
    SweepRow,
    dev_loss_minimum,
    rank_correlation,
    write_confusion_csv,
    write_json,
)
from shallowmimic.harness.workspace import Workspace
from shallowmimic.nn.absorb import absorb_bottleneck
from shallowmimic.nn.builders import format_hidden_units, mlp_spec, shallow_spec
from shallowmimic.nn.network import Model, NetworkSpec, init_params, param_count
from shallowmimic.nn.serialization import load_model, model_digest, save_model
from shallowmimic.numerics.matrix import Matrix
from shallowmimic.numerics.rng import RngStream
from shallowmimic.optim.config import MetricsRecord, TrainConfig
from shallowmimic.optim.trainer import EpochCallback, confusion_matrix, evaluate, train
from shallowmimic.utils.constants import MODEL_EXTENSION
from shallowmimic.utils.security import calculate_bytes_hash

logger = logging.getLogger(__name__)

# child stream ids of a run seed; the trainer owns 0 (shuffle) and 1 (dropout)
INIT_STREAM = 2
BOOTSTRAP_STREAM = 3


class ExperimentData(NamedTuple):
    """Preprocessed splits shared by every run of a command."""

    train: Dataset
    unlabeled: Matrix
    dev: Dataset
    test: Optional[Dataset]
    pipeline: List[PreprocessStats]


@dataclass
class TrainedTeacher:
    """A teacher (single or ensemble) with its reference errors."""

    teacher: Teacher
    dev_error: float
    test_error: Optional[float]
    digest: str

    @property
    def reference_error(self) -> float:
        return self.test_error if self.test_error is not None else self.dev_error


@dataclass
class EvalReport:
    """Outcome of ``cmd_eval``."""

    error_rate: float
    rows: int
    confusion: Optional[np.ndarray] = None
    confusion_path: Optional[Path] = None


@dataclass
class AbsorbReport:
    """Outcome of ``cmd_absorb``."""

    before: int
    after: int
    output: Path


@dataclass
class RunSummary:
    """Files and errors produced by a training command."""

    models: List[Path] = field(default_factory=list)
    dev_errors: List[float] = field(default_factory=list)
    test_errors: List[Optional[float]] = field(default_factory=list)
    ensemble_dev_error: Optional[float] = None
    data: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "models": [path.name for path in self.models],
            "dev_errors": self.dev_errors,
            "test_errors": self.test_errors,
            "ensemble_dev_error": self.ensemble_dev_error,
            "data": self.data,
        }


# Data -----------------------------------------------------------------------


def _preprocess(
    config: ExperimentConfig, train: Dataset, unlabeled: Matrix
) -> Tuple[Dataset, List[PreprocessStats]]:
    if config.preprocess == "standardize":
        transformed, stats = standardize(train)
        return transformed, [stats]
    if config.preprocess == "gcn_zca":
        extra = unlabeled if config.zca_include_pool else None
        return fit_gcn_zca(train, config.zca_epsilon, extra=extra)
    return train, []


def load_experiment_data(config: ExperimentConfig) -> ExperimentData:
    """
    Load or generate the splits and fit preprocessing on the training set.

    Raises:
        ConfigurationError: If CSV mode lacks a dev file.
        DataError: If a file cannot be read.
    """
    test: Optional[Dataset]
    if config.uses_synthetic:
        splits = make_synthetic(config.synthetic_spec(), config.synth_seed)
        train, unlabeled, dev, test = splits
    else:
        if not config.dev_csv:
            raise ConfigurationError("'dev_csv' is required when 'train_csv' is set")

        def labeled(name: str, class_count: Optional[int]) -> Dataset:
            return load_csv(
                Path(name),
                config.label_column,
                class_count,
                input_shape=config.input_image_shape,
            )

        train = labeled(config.train_csv, config.class_count or None)
        dev = labeled(config.dev_csv, train.class_count)
        test = labeled(config.test_csv, train.class_count) if config.test_csv else None
        unlabeled = (
            read_matrix_csv(Path(config.unlabeled_csv))
            if config.unlabeled_csv
            else np.zeros((0, train.dim), dtype=np.float64)
        )

    # statistics come from the training split only; other splits reuse them
    train, pipeline = _preprocess(config, train, unlabeled)
    dev = apply_pipeline(pipeline, dev)
    if test is not None:
        test = apply_pipeline(pipeline, test)
    if unlabeled.shape[0]:
        pool = Dataset(unlabeled, train.class_count)
        unlabeled = apply_pipeline(pipeline, pool).features

    return ExperimentData(train, unlabeled, dev, test, pipeline)


def describe_data(config: ExperimentConfig, data: ExperimentData) -> Dict[str, Any]:
    """Summary of the data source and the fitted preprocessing steps."""
    return {
        "benchmark": config.synthetic_spec().to_dict() if config.uses_synthetic else None,
        "train_csv": config.train_csv or None,
        "preprocess": [stats.to_dict() for stats in data.pipeline],
    }


# Architectures --------------------------------------------------------------


def teacher_spec(config: ExperimentConfig, data: ExperimentData) -> NetworkSpec:
    """Deep ReLU MLP teacher, with the conv+pool front end for image data when configured."""
    return mlp_spec(
        data.train.feature_shape,
        config.teacher_hidden,
        data.train.class_count,
        dropout=config.teacher_dropout,
        conv=config.conv,
    )


def student_spec(config: ExperimentConfig, data: ExperimentData, hidden: int) -> NetworkSpec:
    """Single-hidden-layer student with the configured bottleneck and front end."""
    return shallow_spec(
        data.train.feature_shape,
        hidden,
        data.train.class_count,
        bottleneck=config.bottleneck or None,
        dropout=config.dropout,
        conv=config.conv,
    )


# Training helpers -----------------------------------------------------------


def _test_error(model: Model, data: ExperimentData) -> Optional[float]:
    if data.test is None or not len(data.test):
        return None
    return evaluate(model, data.test)


def _ensemble_error(teacher: Teacher, dataset: Dataset) -> float:
    labels = dataset.require_labels()
    predicted = np.argmax(teacher_logits(teacher, dataset.features), axis=1)
    return float(np.mean(predicted != labels))


def _fit(
    config: ExperimentConfig,
    spec: NetworkSpec,
    train_set: Dataset,
    dev_set: Dataset,
    train_config: TrainConfig,
    on_epoch_end: Optional[EpochCallback] = None,
) -> Tuple[Model, List[MetricsRecord]]:
    model = init_params(spec, RngStream(train_config.seed).spawn(INIT_STREAM))
    logger.debug(f"Training {spec} with {train_config.to_dict()}")
    return train(
        model,
        train_set,
        dev_set,
        train_config,
        logit_scale=train_set.logit_scale,
        progress=config.progress,
        on_epoch_end=on_epoch_end,
    )


def _teacher_train_set(config: ExperimentConfig, data: ExperimentData, seed: int) -> Dataset:
    if not config.bootstrap:
        return data.train
    return bootstrap(data.train, RngStream(seed).spawn(BOOTSTRAP_STREAM))


def _log_overfitting(model_id: str, records: Sequence[MetricsRecord]) -> None:
    epoch, gap = dev_loss_minimum(records)
    logger.info(f"{model_id}: dev-loss minimum at epoch {epoch}, final gap {gap:.4f}")


def _digest(teacher: Teacher) -> str:
    if isinstance(teacher, EnsembleModel):
        joined = "".join(model_digest(member) for member in teacher.members)
        return calculate_bytes_hash(joined.encode("ascii"))
    return model_digest(teacher)


def _as_teacher(models: Sequence[Model]) -> Teacher:
    return models[0] if len(models) == 1 else EnsembleModel(tuple(models))


def _describe_teacher(teacher: Teacher, data: ExperimentData) -> TrainedTeacher:
    test_error = None
    if data.test is not None and len(data.test):
        test_error = _ensemble_error(teacher, data.test)
    dev_error = _ensemble_error(teacher, data.dev)
    return TrainedTeacher(teacher, dev_error, test_error, _digest(teacher))


def _load_teachers(config: ExperimentConfig, data: ExperimentData) -> TrainedTeacher:
    if not config.teacher_models:
        raise ConfigurationError("'teacher_models' must list at least one teacher model file")
    teacher = _as_teacher([load_model(Path(path)) for path in config.teacher_models])
    if teacher_input_dim(teacher) != data.train.dim:
        raise ConfigurationError(
            f"Teacher input width {teacher_input_dim(teacher)} does not match "
            f"data width {data.train.dim}"
        )
    return _describe_teacher(teacher, data)


def _train_teacher_members(
    config: ExperimentConfig, data: ExperimentData, count: int
) -> List[Model]:
    """Train ``count`` teachers on seeds 0..count-1, independent of the run seeds."""
    spec = teacher_spec(config, data)
    members = []
    for member in range(count):
        train_set = _teacher_train_set(config, data, member)
        member_config = config.train_config(member, teacher=True)
        model, _ = _fit(config, spec, train_set, data.dev, member_config)
        members.append(model)
    return members


def _fixed_teacher(config: ExperimentConfig, data: ExperimentData) -> TrainedTeacher:
    if config.teacher_models:
        return _load_teachers(config, data)
    logger.info(f"Training a fixed teacher ensemble of {config.ensemble_size} member(s)")
    members = _train_teacher_members(config, data, config.ensemble_size)
    return _describe_teacher(_as_teacher(members), data)


def _distill_student(
    config: ExperimentConfig,
    data: ExperimentData,
    transfer: Dataset,
    spec: NetworkSpec,
    seed: int,
) -> Tuple[Model, List[MetricsRecord]]:
    """Train a student on a transfer set; the returned model emits raw logits."""
    run_config = config.train_config(seed, config.loss_kind)
    student, records = _fit(config, spec, transfer, data.dev, run_config)
    if transfer.logit_scale is not None:
        student = fold_logit_scale(student, transfer.logit_scale)
    return student, records


# Commands -------------------------------------------------------------------


def cmd_train_teacher(config: ExperimentConfig, workspace: Workspace) -> RunSummary:
    """
    Train one deep teacher per seed.

    With ``bootstrap`` set, each teacher sees its own bootstrap resample
    of the training set, so the seeds form a diverse ensemble.

    Returns:
        RunSummary with model paths, member errors and, for several
        seeds, the ensemble dev error.
    """
    data = load_experiment_data(config)
    workspace.save_pipeline(data.pipeline)
    spec = teacher_spec(config, data)
    logger.info(f"Teacher architecture: {spec} ({param_count(spec):,} parameters)")

    summary = RunSummary(data=describe_data(config, data))
    members: List[Model] = []
    for seed in config.seeds:
        model_id = f"teacher_s{seed}"
        train_set = _teacher_train_set(config, data, seed)
        run_config = config.train_config(seed, teacher=True)
        model, records = _fit(config, spec, train_set, data.dev, run_config)
        summary.models.append(workspace.save_run(model_id, model, records))
        summary.dev_errors.append(evaluate(model, data.dev))
        summary.test_errors.append(_test_error(model, data))
        members.append(model)

    if len(members) > 1:
        summary.ensemble_dev_error = _ensemble_error(EnsembleModel(tuple(members)), data.dev)
        logger.info(
            f"Ensemble of {len(members)}: dev_error={summary.ensemble_dev_error:.4f} "
            f"(median member {float(np.median(summary.dev_errors)):.4f})"
        )
    write_json(workspace.table_path("train_teacher", ".json"), summary.to_dict())
    return summary


def cmd_train_baseline(config: ExperimentConfig, workspace: Workspace) -> RunSummary:
    """Train the shallow student architecture directly on hard labels, one model per seed."""
    data = load_experiment_data(config)
    workspace.save_pipeline(data.pipeline)
    spec = student_spec(config, data, config.student_hidden)

    summary = RunSummary(data=describe_data(config, data))
    for seed in config.seeds:
        model_id = f"baseline_h{config.student_hidden}_s{seed}"
        model, records = _fit(config, spec, data.train, data.dev, config.train_config(seed))
        _log_overfitting(model_id, records)
        summary.models.append(workspace.save_run(model_id, model, records))
        summary.dev_errors.append(evaluate(model, data.dev))
        summary.test_errors.append(_test_error(model, data))
    write_json(workspace.table_path("train_baseline", ".json"), summary.to_dict())
    return summary


def cmd_distill(config: ExperimentConfig, workspace: Workspace) -> RunSummary:
    """
    Distill a shallow student from saved teacher model(s).

    The transfer set is the training features (labels dropped) plus the
    unlabeled pool, scored by the teacher or the teacher ensemble. The
    student is evaluated on dev/test hard labels.

    Raises:
        ConfigurationError: If no teacher is given or its input width does
            not match the data.
    """
    data = load_experiment_data(config)
    workspace.save_pipeline(data.pipeline)
    teacher = _load_teachers(config, data)
    transfer = build_transfer_set(data.train, data.unlabeled, teacher.teacher, config.normalize)
    if config.save_transfer:
        save_transfer_set(transfer, workspace.transfer_dir, teacher.digest)

    spec = student_spec(config, data, config.student_hidden)
    summary = RunSummary(data=describe_data(config, data))
    for seed in config.seeds:
        model_id = f"mimic_h{config.student_hidden}_s{seed}"
        student, records = _distill_student(config, data, transfer, spec, seed)
        _log_overfitting(model_id, records)
        summary.models.append(workspace.save_run(model_id, student, records))
        summary.dev_errors.append(evaluate(student, data.dev))
        summary.test_errors.append(_test_error(student, data))
        logger.info(
            f"{model_id}: dev_error={summary.dev_errors[-1]:.4f} "
            f"(teacher {teacher.dev_error:.4f})"
        )

    payload = summary.to_dict()
    payload.update(
        teacher_dev_error=teacher.dev_error,
        teacher_test_error=teacher.test_error,
        transfer_rows=len(transfer),
        normalized=transfer.logit_scale is not None,
        loss=config.mimic_loss,
    )
    write_json(workspace.table_path("distill", ".json"), payload)
    return summary


def cmd_sweep_params(config: ExperimentConfig, workspace: Workspace) -> SweepResult:
    """
    Accuracy versus parameter count for direct and mimic shallow nets.

    For every seed and width, a direct-label net and a mimic net with the
    same spec and seed are trained against one fixed teacher.
    """
    data = load_experiment_data(config)
    workspace.save_pipeline(data.pipeline)
    teacher = _fixed_teacher(config, data)
    transfer = build_transfer_set(data.train, data.unlabeled, teacher.teacher, config.normalize)

    result = SweepResult()
    for seed in config.seeds:
        for width in config.widths:
            spec = student_spec(config, data, width)
            hidden = format_hidden_units(spec)

            direct_id = f"direct_h{width}_s{seed}"
            direct, records = _fit(config, spec, data.train, data.dev, config.train_config(seed))
            _log_overfitting(direct_id, records)
            workspace.save_run(direct_id, direct, records)
            result.add(
                SweepRow(
                    direct_id,
                    param_count(spec),
                    hidden,
                    DIRECT,
                    evaluate(direct, data.dev),
                    _test_error(direct, data),
                )
            )

            mimic_id = f"mimic_h{width}_s{seed}"
            mimic, records = _distill_student(config, data, transfer, spec, seed)
            _log_overfitting(mimic_id, records)
            workspace.save_run(mimic_id, mimic, records)
            result.add(
                SweepRow(
                    mimic_id,
                    param_count(mimic.spec),
                    hidden,
                    MIMIC,
                    evaluate(mimic, data.dev),
                    _test_error(mimic, data),
                    teacher.reference_error,
                )
            )

    result.write_csv(workspace.table_path("sweep_params"))
    return result


def _teacher_ladder(
    config: ExperimentConfig, data: ExperimentData
) -> List[Tuple[str, TrainedTeacher]]:
    """
    Teachers of increasing quality.

    Saved teacher files are used in the given order when configured.
    Otherwise one run records checkpoints of member 0 at the
    ``ladder_epochs`` milestones, followed by ensembles of the first ``m``
    fully trained members for every ``m`` in ``ladder_ensembles``.
    """
    if config.teacher_models:
        ladder = []
        for index, path in enumerate(config.teacher_models):
            model = load_model(Path(path))
            ladder.append((f"rung{index}", _describe_teacher(model, data)))
        return ladder

    final_epochs = config.teacher_epochs or config.max_epochs
    late = [e for e in config.ladder_epochs if e > final_epochs]
    if late:
        raise ConfigurationError(f"ladder_epochs {late} exceed the {final_epochs} teacher epochs")

    spec = teacher_spec(config, data)
    checkpoints: Dict[int, Model] = {}

    def snapshot(epoch: int, model: Model, record: MetricsRecord) -> None:
        if epoch in config.ladder_epochs:
            checkpoints[epoch] = model

    members: List[Model] = []
    for member in range(max(config.ladder_ensembles)):
        train_set = _teacher_train_set(config, data, member)
        callback = snapshot if member == 0 else None
        member_config = config.train_config(member, teacher=True)
        model, _ = _fit(config, spec, train_set, data.dev, member_config, callback)
        members.append(model)

    missing = sorted(set(config.ladder_epochs) - set(checkpoints))
    if missing:
        logger.warning(f"Early stopping skipped ladder checkpoints at epochs {missing}")
    ladder = [
        (f"epoch{epoch}", _describe_teacher(checkpoints[epoch], data))
        for epoch in sorted(set(config.ladder_epochs))
        if epoch in checkpoints
    ]
    ladder += [
        (f"ensemble{size}", _describe_teacher(_as_teacher(members[:size]), data))
        for size in sorted(set(config.ladder_ensembles))
    ]
    return ladder


def cmd_sweep_teacher(config: ExperimentConfig, workspace: Workspace) -> SweepResult:
    """
    Student accuracy versus teacher accuracy.

    Every rung of the teacher ladder is distilled into each student width.
    The Spearman correlation between teacher and student accuracy across
    rungs is written, per seed and width, to ``sweep_teacher_trend.json``.
    """
    data = load_experiment_data(config)
    workspace.save_pipeline(data.pipeline)
    ladder = _teacher_ladder(config, data)
    transfers = [
        build_transfer_set(data.train, data.unlabeled, rung.teacher, config.normalize)
        for _, rung in ladder
    ]

    result = SweepResult()
    trend: Dict[str, Optional[float]] = {}
    for seed in config.seeds:
        for width in config.widths:
            spec = student_spec(config, data, width)
            teacher_errors, student_errors = [], []
            for (name, rung), transfer in zip(ladder, transfers):
                model_id = f"mimic_{name}_h{width}_s{seed}"
                student, records = _distill_student(config, data, transfer, spec, seed)
                workspace.save_run(model_id, student, records)
                row = SweepRow(
                    model_id,
                    param_count(student.spec),
                    format_hidden_units(spec),
                    MIMIC,
                    evaluate(student, data.dev),
                    _test_error(student, data),
                    rung.reference_error,
                )
                result.add(row)
                teacher_errors.append(rung.reference_error)
                student_errors.append(
                    row.test_error if row.test_error is not None else row.dev_error
                )
            trend[f"h{width}_s{seed}"] = rank_correlation(teacher_errors, student_errors)

    defined = [value for value in trend.values() if value is not None]
    write_json(
        workspace.table_path("sweep_teacher_trend", ".json"),
        {
            "rungs": [name for name, _ in ladder],
            "spearman": trend,
            "median_spearman": float(np.median(defined)) if defined else None,
        },
    )
    result.write_csv(workspace.table_path("sweep_teacher"))
    return result


def cmd_eval(config: ExperimentConfig, workspace: Optional[Workspace] = None) -> EvalReport:
    """
    Error rate of a saved model on a labeled CSV dataset.

    The preprocessing pipeline in ``stats`` is applied first when given.
    With ``confusion`` set, the per-class confusion matrix is written as
    CSV (rows are true classes).

    Raises:
        ConfigurationError: If ``model`` or ``dataset`` is missing.
        ShapeError: If the data width does not match the model.
    """
    if not config.model or not config.dataset:
        raise ConfigurationError("eval needs both 'model' and 'dataset'")

    model = load_model(Path(config.model))
    dataset = load_csv(Path(config.dataset), config.label_column, model.spec.output_dim)
    if config.stats:
        dataset = apply_pipeline(load_stats(Path(config.stats)), dataset)

    error = evaluate(model, dataset)
    report = EvalReport(error_rate=error, rows=len(dataset))
    if config.confusion:
        report.confusion = confusion_matrix(model, dataset)
        report.confusion_path = write_confusion_csv(Path(config.confusion), report.confusion)
    logger.info(f"Evaluated {config.model} on {len(dataset)} rows: error_rate={error:.4f}")
    return report


def cmd_absorb(config: ExperimentConfig, workspace: Optional[Workspace] = None) -> AbsorbReport:
    """
    Merge a model's linear bottleneck into the following layer.

    The result is written to ``absorbed_out``, or next to the input as
    ``<name>_absorbed.smim``.

    Raises:
        ConfigurationError: If ``model`` is missing.
        ContractError: If the model has no bottleneck to absorb.
    """
    if not config.model:
        raise ConfigurationError("absorb needs 'model'")

    source = Path(config.model)
    model = load_model(source)
    merged = absorb_bottleneck(model)
    output = (
        Path(config.absorbed_out)
        if config.absorbed_out
        else source.with_name(f"{source.stem}_absorbed{MODEL_EXTENSION}")
    )
    save_model(merged, output)
    return AbsorbReport(
        before=param_count(model.spec), after=param_count(merged.spec), output=output
    )


COMMANDS = {
    "train-teacher": cmd_train_teacher,
    "train-baseline": cmd_train_baseline,
    "distill": cmd_distill,
    "sweep-params": cmd_sweep_params,
    "sweep-teacher": cmd_sweep_teacher,
    "eval": cmd_eval,
    "absorb": cmd_absorb,
}
