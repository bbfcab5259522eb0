"""Exception types raised by the registration pipeline."""

from __future__ import annotations


class DualRegError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(DualRegError):
    """A configuration value is outside its allowed domain."""


class FileFormatError(DualRegError):
    """A data file could not be parsed.

    Carries the path and, when known, the 1-based line number of the
    offending line so the CLI can point at it.
    """

    def __init__(self, path: str, message: str, line: int | None = None):
        self.path = path
        self.line = line
        where = f"{path}:{line}" if line is not None else path
        super().__init__(f"{where}: {message}")


class DegenerateCloudError(DualRegError):
    """A point cloud is too small or too degenerate for the operation."""


class DegenerateSampleError(DualRegError):
    """A point sample does not constrain a unique rigid transform."""


class InsufficientCorrespondencesError(DualRegError):
    """Fewer correspondences than the stage's minimum sample size."""


class NoProxySupportError(DualRegError):
    """No cloud points fall inside any anchor neighborhood."""


class StageError(DualRegError):
    """Wraps a failure with the pipeline stage it occurred in."""

    def __init__(self, stage: str, cause: Exception):
        self.stage = stage
        super().__init__(f"stage '{stage}': {cause}")
        self.__cause__ = cause
