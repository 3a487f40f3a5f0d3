"""
Experiment configuration.

Experiments are described by an INI file read with ``configparser``:

    [experiment]
    seeds = 0,1,2

    [train]
    learning_rate = 0.05

Key names are unique across sections, so every key can also be given on
the command line as ``--key value`` (``--learning-rate`` works too).
Unknown sections or keys and unparsable values are configuration errors.
"""

import configparser
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

from shallowmimic.data.synthetic import SyntheticSpec
from shallowmimic.exceptions import ConfigurationError, DataError
from shallowmimic.losses.objectives import LossKind
from shallowmimic.optim.config import TrainConfig
from shallowmimic.utils.constants import BenchmarkDefaults, NumericDefaults, TrainDefaults
from shallowmimic.utils.security import validate_safe_path
from shallowmimic.utils.validators import validate_file_exists, validate_seed

logger = logging.getLogger(__name__)

PREPROCESS_CHOICES = ("none", "standardize", "gcn_zca")
NORMALIZE_CHOICES = ("auto", "true", "false")
MIMIC_LOSSES = (LossKind.L2_LOGIT.value, LossKind.KL_MIMIC.value, LossKind.L2_PROB.value)

SECTIONS: Dict[str, Tuple[str, ...]] = {
    "experiment": ("out_dir", "seeds"),
    "data": (
        "train_csv",
        "dev_csv",
        "test_csv",
        "unlabeled_csv",
        "label_column",
        "class_count",
        "image_shape",
        "synth_seed",
        "synth_classes",
        "synth_dims",
        "synth_clusters",
        "synth_separation",
        "synth_cluster_std",
        "synth_train",
        "synth_unlabeled",
        "synth_dev",
        "synth_test",
        "synth_label_noise",
        "preprocess",
        "zca_epsilon",
        "zca_include_pool",
    ),
    "network": (
        "teacher_hidden",
        "teacher_dropout",
        "student_hidden",
        "bottleneck",
        "dropout",
        "conv_channels",
        "conv_kernel",
        "pool_size",
    ),
    "train": (
        "learning_rate",
        "momentum",
        "batch_size",
        "max_epochs",
        "teacher_epochs",
        "patience",
        "lr_decay",
        "shuffle",
        "record_wall_time",
        "bootstrap",
        "progress",
    ),
    "distill": (
        "teacher_models",
        "normalize_targets",
        "mimic_loss",
        "ensemble_size",
        "save_transfer",
    ),
    "sweep": ("widths", "ladder_epochs", "ladder_ensembles"),
    "eval": ("model", "dataset", "confusion", "stats", "absorbed_out"),
}

KEY_SECTIONS = {key: section for section, keys in SECTIONS.items() for key in keys}

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_bool(key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigurationError(f"'{key}' must be a boolean (true/false). Got: {text!r}")


def _parse_int_list(key: str, text: str) -> Tuple[int, ...]:
    items = [item.strip() for item in text.split(",") if item.strip()]
    try:
        return tuple(int(item) for item in items)
    except ValueError as e:
        raise ConfigurationError(f"'{key}' must be a comma-separated list of integers. Got: {text!r}") from e


def _parse_str_list(text: str) -> Tuple[str, ...]:
    return tuple(item.strip() for item in text.split(",") if item.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Typed view of an experiment configuration file plus overrides."""

    # [experiment]
    out_dir: str = "runs"
    seeds: Tuple[int, ...] = (0,)
    # [data]
    train_csv: str = ""
    dev_csv: str = ""
    test_csv: str = ""
    unlabeled_csv: str = ""
    label_column: str = "label"
    class_count: int = 0
    image_shape: Tuple[int, ...] = ()
    synth_seed: int = 0
    synth_classes: int = BenchmarkDefaults.CLASSES
    synth_dims: int = BenchmarkDefaults.DIMS
    synth_clusters: int = BenchmarkDefaults.CLUSTERS_PER_CLASS
    synth_separation: float = BenchmarkDefaults.SEPARATION
    synth_cluster_std: float = BenchmarkDefaults.CLUSTER_STD
    synth_train: int = BenchmarkDefaults.N_TRAIN
    synth_unlabeled: int = BenchmarkDefaults.N_UNLABELED
    synth_dev: int = BenchmarkDefaults.N_DEV
    synth_test: int = BenchmarkDefaults.N_TEST
    synth_label_noise: float = 0.0
    preprocess: str = "none"
    zca_epsilon: float = NumericDefaults.ZCA_EPSILON
    zca_include_pool: bool = False
    # [network]
    teacher_hidden: Tuple[int, ...] = TrainDefaults.TEACHER_HIDDEN
    teacher_dropout: float = TrainDefaults.DROPOUT
    student_hidden: int = TrainDefaults.STUDENT_HIDDEN
    bottleneck: int = TrainDefaults.BOTTLENECK
    dropout: float = TrainDefaults.DROPOUT
    conv_channels: int = 0
    conv_kernel: int = 3
    pool_size: int = 2
    # [train]
    learning_rate: float = TrainDefaults.LEARNING_RATE
    momentum: float = TrainDefaults.MOMENTUM
    batch_size: int = TrainDefaults.BATCH_SIZE
    max_epochs: int = TrainDefaults.MAX_EPOCHS
    teacher_epochs: int = 0
    patience: int = 0
    lr_decay: float = TrainDefaults.LR_DECAY
    shuffle: bool = True
    record_wall_time: bool = False
    bootstrap: bool = False
    progress: bool = False
    # [distill]
    teacher_models: Tuple[str, ...] = ()
    normalize_targets: str = "auto"
    mimic_loss: str = LossKind.L2_LOGIT.value
    ensemble_size: int = 1
    save_transfer: bool = False
    # [sweep]
    widths: Tuple[int, ...] = (16, 64, 256)
    ladder_epochs: Tuple[int, ...] = (1, 4)
    ladder_ensembles: Tuple[int, ...] = (1, 3, 5)
    # [eval]
    model: str = ""
    dataset: str = ""
    confusion: str = ""
    stats: str = ""
    absorbed_out: str = ""

    source: Optional[str] = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ConfigurationError("'seeds' must list at least one seed")
        for seed in self.seeds:
            validate_seed(seed)
        self._check_choice("preprocess", PREPROCESS_CHOICES)
        self._check_choice("normalize_targets", NORMALIZE_CHOICES)
        self._check_choice("mimic_loss", MIMIC_LOSSES)

        for key in ("student_hidden", "ensemble_size", "conv_kernel", "pool_size"):
            if getattr(self, key) < 1:
                raise ConfigurationError(f"'{key}' must be at least 1. Got: {getattr(self, key)}")
        for key in ("class_count", "bottleneck", "conv_channels", "teacher_epochs", "patience"):
            if getattr(self, key) < 0:
                raise ConfigurationError(f"'{key}' must be non-negative. Got: {getattr(self, key)}")
        for key in ("teacher_hidden", "widths", "ladder_epochs", "ladder_ensembles"):
            if any(value < 1 for value in getattr(self, key)):
                raise ConfigurationError(f"'{key}' entries must be positive. Got: {getattr(self, key)}")
        if self.image_shape and len(self.image_shape) != 3:
            raise ConfigurationError(f"'image_shape' must be channels,height,width. Got: {self.image_shape}")
        if self.conv_channels and not self.image_shape:
            raise ConfigurationError("'conv_channels' requires 'image_shape'")

        # hyperparameter ranges are owned by TrainConfig and SyntheticSpec
        self.train_config(seed=self.seeds[0])
        if not self.train_csv:
            self.synthetic_spec()

    def _check_choice(self, key: str, choices: Tuple[str, ...]) -> None:
        if getattr(self, key) not in choices:
            raise ConfigurationError(
                f"'{key}' must be one of {', '.join(choices)}. Got: {getattr(self, key)!r}"
            )

    @property
    def uses_synthetic(self) -> bool:
        return not self.train_csv

    @property
    def loss_kind(self) -> LossKind:
        return LossKind(self.mimic_loss)

    @property
    def normalize(self) -> bool:
        """Whether teacher logits are normalized: on by default for L2 logit regression only."""
        if self.normalize_targets == "auto":
            return self.loss_kind is LossKind.L2_LOGIT
        return self.normalize_targets == "true"

    @property
    def input_image_shape(self) -> Optional[Tuple[int, int, int]]:
        if not self.image_shape:
            return None
        c, h, w = self.image_shape
        return (c, h, w)

    @property
    def conv(self) -> Optional[Tuple[int, int, int]]:
        if not self.conv_channels:
            return None
        return (self.conv_channels, self.conv_kernel, self.pool_size)

    def train_config(self, seed: int, loss: LossKind = LossKind.CROSS_ENTROPY_HARD, teacher: bool = False) -> TrainConfig:
        """TrainConfig for one run."""
        epochs = self.teacher_epochs if teacher and self.teacher_epochs else self.max_epochs
        return TrainConfig(
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            batch_size=self.batch_size,
            max_epochs=epochs,
            seed=seed,
            loss=loss,
            early_stop_patience=self.patience or None,
            lr_decay=self.lr_decay,
            shuffle=self.shuffle,
            record_wall_time=self.record_wall_time,
        )

    def synthetic_spec(self) -> SyntheticSpec:
        return SyntheticSpec(
            classes=self.synth_classes,
            dims=self.synth_dims,
            clusters_per_class=self.synth_clusters,
            separation=self.synth_separation,
            cluster_std=self.synth_cluster_std,
            n_train=self.synth_train,
            n_unlabeled=self.synth_unlabeled,
            n_dev=self.synth_dev,
            n_test=self.synth_test,
            label_noise=self.synth_label_noise,
            image_shape=self.input_image_shape,
        )

    def referenced_paths(self) -> List[Path]:
        """Input files this configuration reads."""
        names = [self.train_csv, self.dev_csv, self.test_csv, self.unlabeled_csv]
        names += [self.model, self.dataset, self.stats]
        names += list(self.teacher_models)
        return [Path(name) for name in names if name]

    def validate_paths(self) -> None:
        """
        Check that every referenced input file exists.

        Raises:
            ConfigurationError: On a missing file or an unsafe path.
        """
        for path in self.referenced_paths():
            validate_safe_path(path)
            try:
                validate_file_exists(path)
            except DataError as e:
                raise ConfigurationError(str(e)) from e

    def to_dict(self) -> Dict[str, Any]:
        return {
            f.name: list(value) if isinstance(value, tuple) else value
            for f in fields(self)
            if f.name != "source"
            for value in [getattr(self, f.name)]
        }


_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig) if f.name != "source"}


def _convert(key: str, text: str) -> Any:
    kind = _FIELD_TYPES[key]
    text = text.strip()
    if kind is bool:
        return _parse_bool(key, text)
    if kind is int:
        try:
            return int(text)
        except ValueError as e:
            raise ConfigurationError(f"'{key}' must be an integer. Got: {text!r}") from e
    if kind is float:
        try:
            return float(text)
        except ValueError as e:
            raise ConfigurationError(f"'{key}' must be a number. Got: {text!r}") from e
    if kind == Tuple[int, ...]:
        return _parse_int_list(key, text)
    if kind == Tuple[str, ...]:
        return _parse_str_list(text)
    return text


def normalize_key(name: str) -> str:
    """Map ``--learning-rate`` style names onto config keys."""
    return name.lstrip("-").replace("-", "_")


def _read_file(path: Path) -> Dict[str, str]:
    try:
        validate_file_exists(path)
    except DataError as e:
        raise ConfigurationError(str(e)) from e
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str  # type: ignore[assignment,method-assign]
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as e:
        raise ConfigurationError(f"Cannot parse config file {path}: {e}") from e

    values: Dict[str, str] = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigurationError(
                f"Unknown section [{section}] in {path}. Known sections: {', '.join(SECTIONS)}"
            )
        for key, value in parser.items(section):
            if key not in SECTIONS[section]:
                where = f" (belongs in [{KEY_SECTIONS[key]}])" if key in KEY_SECTIONS else ""
                raise ConfigurationError(f"Unknown key '{key}' in section [{section}] of {path}{where}")
            values[key] = value
    return values


def load_config(
    path: Optional[Path] = None,
    overrides: Optional[Mapping[str, str]] = None,
    check_paths: bool = True,
) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a file and command-line overrides.

    Args:
        path: Optional INI file.
        overrides: ``key -> raw string`` pairs taking precedence over the file.
        check_paths: Verify that referenced input files exist.

    Returns:
        The validated configuration.

    Raises:
        ConfigurationError: On unknown sections/keys, unparsable values,
            out-of-range values or missing input files.
    """
    raw: Dict[str, str] = _read_file(path) if path is not None else {}
    for name, value in (overrides or {}).items():
        key = normalize_key(name)
        if key not in KEY_SECTIONS:
            raise ConfigurationError(f"Unknown configuration key '{name}'")
        raw[key] = value

    values = {key: _convert(key, text) for key, text in raw.items()}
    config = ExperimentConfig(**values, source=str(path) if path else None)
    if check_paths:
        config.validate_paths()
    logger.debug(f"Loaded configuration from {path or '<defaults>'} with {len(raw)} explicit key(s)")
    return config


def with_overrides(config: ExperimentConfig, **values: Any) -> ExperimentConfig:
    """Copy of ``config`` with typed values replaced."""
    return replace(config, **values)
