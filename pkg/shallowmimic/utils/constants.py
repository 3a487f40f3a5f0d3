"""
Configuration constants for shallowmimic.

This module centralizes all configuration values to avoid magic numbers
and make the codebase more maintainable.
"""

# File format constants
MODEL_EXTENSION = ".smim"
STATS_EXTENSION = ".stats"
CSV_EXTENSIONS = {".csv"}


# Numerical constants
class NumericDefaults:
    """Floors and tolerances shared by the numerical modules."""

    EPSILON = 1e-8  # sigma floor for standardization, GCN and logit normalization
    ZCA_EPSILON = 1e-5
    MAX_SEED = 2**64 - 1
    PREDICT_BATCH_SIZE = 256


# Binary container layout
class ModelFormat:
    """Constants for the versioned binary model and stats containers."""

    MAGIC = b"SMIM"
    STATS_MAGIC = b"SMPS"
    VERSION = 1

    # Layer type tags
    TAG_DENSE = 1
    TAG_DROPOUT = 2
    TAG_CONV2D = 3
    TAG_MAXPOOL2D = 4
    TAG_FLATTEN = 5

    # Activation tags
    ACT_IDENTITY = 0
    ACT_RELU = 1


# CSV output layout
class CsvFormat:
    """Headers of the CSV files written by the harness."""

    METRICS_HEADER = ["epoch", "train_loss", "dev_loss", "dev_error", "seconds", "params"]
    SWEEP_HEADER = [
        "model_id",
        "params",
        "hidden_units",
        "regime",
        "dev_error",
        "test_error",
        "teacher_error",
    ]
    FEATURE_PREFIX = "x"
    LABEL_COLUMN = "label"
    TARGET_PREFIX = "z"


# Desk-scale benchmark
class BenchmarkDefaults:
    """Fixed synthetic benchmark used by the experiment harness."""

    CLASSES = 10
    DIMS = 64
    CLUSTERS_PER_CLASS = 3
    SEPARATION = 3.0
    CLUSTER_STD = 1.0
    N_TRAIN = 5000
    N_UNLABELED = 20000
    N_DEV = 2000
    N_TEST = 2000


# Training defaults
class TrainDefaults:
    """Desk-scale hyperparameter defaults."""

    LEARNING_RATE = 0.01
    MOMENTUM = 0.9
    BATCH_SIZE = 64
    MAX_EPOCHS = 30
    LR_DECAY = 1.0
    TEACHER_HIDDEN = (128, 128, 128)
    STUDENT_HIDDEN = 256
    BOTTLENECK = 0
    DROPOUT = 0.0


# CLI exit codes
class ExitCodes:
    """Process exit codes of the command-line interface."""

    SUCCESS = 0
    UNEXPECTED_ERROR = 1
    CONFIG_ERROR = 2
    DATA_ERROR = 3
    NUMERIC_ERROR = 4


# Logging configuration
class LoggingConfig:
    """Constants for logging configuration."""

    DEFAULT_LEVEL = "INFO"
    FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


# Transfer-set persistence
class TransferFormat:
    """File names of a persisted transfer set."""

    FEATURES_FILE = "features.csv"
    TARGETS_FILE = "targets.csv"
    HEADER_FILE = "header.json"
    HEADER_VERSION = 2
