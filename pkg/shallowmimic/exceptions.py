"""
Custom exception classes for shallowmimic.

This module defines a hierarchy of exceptions so that library code can
raise precise errors and the CLI can map them onto stable exit codes.
"""


class ShallowMimicError(Exception):
    """Base exception for all shallowmimic errors."""

    pass


class ConfigurationError(ShallowMimicError):
    """Raised when configuration is invalid."""

    pass


class SpecError(ConfigurationError):
    """Raised when a network specification is invalid."""

    pass


class ShapeError(ShallowMimicError):
    """Raised when array dimensions do not agree."""

    pass


class ContractError(ShallowMimicError):
    """Raised when an operation's precondition is violated."""

    pass


class DataError(ShallowMimicError):
    """Raised when input data cannot be used."""

    pass


class IngestError(DataError):
    """Raised when a dataset file cannot be parsed."""

    pass


class SerializationError(DataError):
    """Raised when a binary model or stats file is malformed."""

    pass


class NumericError(ShallowMimicError):
    """Raised when a numerical procedure fails."""

    pass


class DomainError(NumericError):
    """Raised when a value lies outside an operation's domain."""

    pass
