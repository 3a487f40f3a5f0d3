"""
Utility modules for shallowmimic.

This package contains constants, validators and path/integrity helpers
used throughout the application.
"""

from shallowmimic.utils.constants import (
    BenchmarkDefaults,
    CsvFormat,
    ExitCodes,
    LoggingConfig,
    ModelFormat,
    NumericDefaults,
    TrainDefaults,
    TransferFormat,
)
from shallowmimic.utils.security import (
    calculate_bytes_hash,
    sanitize_filename,
    validate_safe_path,
)
from shallowmimic.utils.validators import (
    validate_file_exists,
    validate_file_format,
    validate_fraction,
    validate_labels,
    validate_output_dir,
    validate_positive,
    validate_seed,
)

__all__ = [
    # Constants
    "BenchmarkDefaults",
    "CsvFormat",
    "ExitCodes",
    "LoggingConfig",
    "ModelFormat",
    "NumericDefaults",
    "TrainDefaults",
    "TransferFormat",
    # Security
    "calculate_bytes_hash",
    "sanitize_filename",
    "validate_safe_path",
    # Validators
    "validate_file_exists",
    "validate_file_format",
    "validate_fraction",
    "validate_labels",
    "validate_output_dir",
    "validate_positive",
    "validate_seed",
]
