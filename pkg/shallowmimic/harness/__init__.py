"""
Experiment harness for shallowmimic.

This package provides the experiment configuration, the output directory
layout, result tables and the experiment commands driven by the CLI.
"""

from shallowmimic.harness.config import (
    ExperimentConfig,
    load_config,
    normalize_key,
    with_overrides,
)
from shallowmimic.harness.experiments import (
    COMMANDS,
    AbsorbReport,
    EvalReport,
    ExperimentData,
    RunSummary,
    cmd_absorb,
    cmd_distill,
    cmd_eval,
    cmd_sweep_params,
    cmd_sweep_teacher,
    cmd_train_baseline,
    cmd_train_teacher,
    load_experiment_data,
    student_spec,
    teacher_spec,
)
from shallowmimic.harness.results import (
    DIRECT,
    MIMIC,
    SweepResult,
    SweepRow,
    dev_loss_minimum,
    rank_correlation,
    read_metrics_csv,
    write_confusion_csv,
    write_json,
    write_metrics_csv,
)
from shallowmimic.harness.workspace import Workspace

__all__ = [
    "ExperimentConfig",
    "load_config",
    "normalize_key",
    "with_overrides",
    "COMMANDS",
    "AbsorbReport",
    "EvalReport",
    "ExperimentData",
    "RunSummary",
    "cmd_absorb",
    "cmd_distill",
    "cmd_eval",
    "cmd_sweep_params",
    "cmd_sweep_teacher",
    "cmd_train_baseline",
    "cmd_train_teacher",
    "load_experiment_data",
    "student_spec",
    "teacher_spec",
    "DIRECT",
    "MIMIC",
    "SweepResult",
    "SweepRow",
    "dev_loss_minimum",
    "rank_correlation",
    "read_metrics_csv",
    "write_confusion_csv",
    "write_json",
    "write_metrics_csv",
    "Workspace",
]
