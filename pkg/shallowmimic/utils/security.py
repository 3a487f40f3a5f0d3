"""
Path and integrity utilities for shallowmimic.

This module provides the path-traversal guard used for experiment output
locations, filename sanitization for model identifiers, and content hashing
used to fingerprint teacher models.
"""

import hashlib
import logging
import re
from pathlib import Path

from shallowmimic.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


def validate_safe_path(path: Path) -> bool:
    """
    Reject paths that climb out of their directory.

    Args:
        path: Path to validate.

    Returns:
        True if path is safe.

    Raises:
        ConfigurationError: If path attempts directory traversal.

    Example:
        >>> validate_safe_path(Path("runs/teacher_s0.smim"))
        True
    """
    if ".." in path.parts:
        raise ConfigurationError(
            f"Path '{path}' contains directory traversal pattern '..'"
        )

    return True


def sanitize_filename(filename: str, max_length: int = 255) -> str:
    """
    Sanitize a model identifier so it can be used as a filename.

    Args:
        filename: Original name.
        max_length: Maximum filename length.

    Returns:
        Name made only of alphanumerics, dash, underscore and dot.

    Example:
        >>> sanitize_filename("mimic/h64 s0")
        'mimic_h64_s0'
    """
    safe_name = filename.replace("/", "_").replace("\\", "_")
    safe_name = re.sub(r"[^a-zA-Z0-9_.-]", "_", safe_name)
    safe_name = safe_name.lstrip(".")

    if not safe_name:
        safe_name = "unnamed"

    return safe_name[:max_length]


def calculate_bytes_hash(payload: bytes, algorithm: str = "sha256") -> str:
    """Return the hexadecimal digest of an in-memory payload."""
    hasher = hashlib.new(algorithm)
    hasher.update(payload)
    return hasher.hexdigest()

