"""Exception types shared across the package."""
from __future__ import annotations


class SectionRecError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(SectionRecError, ValueError):
    """An input file is malformed beyond the tolerated fraction."""


class ConfigError(SectionRecError, ValueError):
    """A run configuration is invalid (CLI exit code 2)."""


class MissingPrerequisiteError(SectionRecError):
    """A pipeline stage ran before the stage that produces its input.

    The message names the stage to run first (CLI exit code 3).
    """
