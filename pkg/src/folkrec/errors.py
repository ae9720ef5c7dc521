"""Exception types shared across the package, each mapped to a CLI exit code."""

from __future__ import annotations


class FolkrecError(Exception):
    """Base class; `exit_code` is what the CLI returns for this failure."""

    exit_code = 1


class ConfigError(FolkrecError):
    """Invalid parameter or option value."""

    exit_code = 2


class MissingInputError(FolkrecError):
    """An expected input file or upstream artifact does not exist."""

    exit_code = 3


class FingerprintMismatchError(FolkrecError):
    """An artifact was produced from a different dataset than the one supplied."""

    exit_code = 4


class DataError(FolkrecError):
    """Malformed or empty input data."""

    exit_code = 5
