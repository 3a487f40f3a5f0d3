"""
Tests for validation and path helpers.
"""

from pathlib import Path

import numpy as np
import pytest

from shallowmimic.exceptions import ConfigurationError, DataError, DomainError
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


class TestValidateSeed:
    """Tests for validate_seed function."""

    @pytest.mark.parametrize("seed", [0, 1, 2**64 - 1, np.int64(5)])
    def test_validate_seed_valid(self, seed):
        """Test seeds in the unsigned 64-bit range pass validation."""
        validate_seed(seed)

    @pytest.mark.parametrize(
        "seed",
        [
            -1,  # Negative
            2**64,  # Too large
            1.0,  # Not an integer
            "3",  # String
            False,  # Bool
        ],
    )
    def test_validate_seed_invalid(self, seed):
        """Test invalid seeds raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            validate_seed(seed)


class TestValidateRanges:
    """Tests for validate_positive and validate_fraction."""

    @pytest.mark.parametrize("value", [0.0, -1.0])
    def test_validate_positive_invalid(self, value):
        """Test non-positive values raise ConfigurationError."""
        with pytest.raises(ConfigurationError):
            validate_positive("learning_rate", value)

    @pytest.mark.parametrize(
        "value,closed_high,ok",
        [
            (0.0, False, True),
            (0.99, False, True),
            (1.0, False, False),  # Open upper bound
            (1.0, True, True),  # Closed upper bound
            (-0.01, False, False),
        ],
    )
    def test_validate_fraction(self, value, closed_high, ok):
        """Test half-open and closed fraction ranges."""
        if ok:
            validate_fraction("momentum", value, closed_high=closed_high)
        else:
            with pytest.raises(ConfigurationError, match="momentum"):
                validate_fraction("momentum", value, closed_high=closed_high)


class TestValidateLabels:
    """Tests for validate_labels function."""

    def test_validate_labels_valid(self):
        """Test labels in [0, C) pass validation."""
        validate_labels(np.array([0, 1, 2]), 3)

    def test_validate_labels_empty(self):
        """Test that an empty label array is valid."""
        validate_labels(np.zeros(0, dtype=np.int64), 3)

    def test_validate_labels_out_of_range(self):
        """Test that a label equal to C names its 1-based row."""
        with pytest.raises(DomainError, match="row 4"):
            validate_labels(np.array([0, 3]), 3, row_offset=3)

    def test_validate_labels_negative(self):
        """Test that negative labels are rejected."""
        with pytest.raises(DomainError):
            validate_labels(np.array([-1]), 3)


class TestValidateFiles:
    """Tests for file and directory validation."""

    def test_validate_file_exists_missing(self, tmp_path):
        """Test that a missing file raises DataError."""
        with pytest.raises(DataError):
            validate_file_exists(tmp_path / "missing.csv")

    def test_validate_file_exists_directory(self, tmp_path):
        """Test that a directory is not a file."""
        with pytest.raises(DataError):
            validate_file_exists(tmp_path)

    def test_validate_file_format(self):
        """Test that only accepted extensions pass."""
        validate_file_format(Path("train.CSV"), {".csv"})
        with pytest.raises(ConfigurationError):
            validate_file_format(Path("train.tsv"), {".csv"})

    def test_validate_output_dir_creates(self, tmp_path):
        """Test that a missing output directory is created."""
        out = validate_output_dir(tmp_path / "runs" / "a")
        assert out.is_dir()

    def test_validate_output_dir_file(self, tmp_path):
        """Test that an existing file cannot be an output directory."""
        target = tmp_path / "file"
        target.write_text("x")
        with pytest.raises(ConfigurationError):
            validate_output_dir(target)


class TestSecurity:
    """Tests for path and hashing helpers."""

    def test_validate_safe_path_traversal(self):
        """Test that '..' components are rejected."""
        with pytest.raises(ConfigurationError):
            validate_safe_path(Path("../outside"))

    def test_validate_safe_path_accepts_nested(self, tmp_path):
        """Test that absolute and nested paths without '..' pass."""
        assert validate_safe_path(tmp_path / "runs" / "models")
        assert validate_safe_path(Path("runs/teacher_s0.smim"))

    @pytest.mark.parametrize(
        "name,expected",
        [
            ("mimic/h64 s0", "mimic_h64_s0"),
            ("..hidden", "hidden"),
            ("", "unnamed"),
        ],
    )
    def test_sanitize_filename(self, name, expected):
        """Test that model identifiers become safe filenames."""
        assert sanitize_filename(name) == expected

    def test_calculate_bytes_hash(self):
        """Test the SHA-256 digest of a known payload."""
        assert calculate_bytes_hash(b"") == (
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        )
