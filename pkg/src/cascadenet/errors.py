"""Exception hierarchy shared across the package.

Every error the library raises deliberately derives from :class:`CascadeNetError`
and carries the process exit code the command-line front end should use, so the
CLI can translate failures without a big isinstance ladder.
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_IO = 3


class CascadeNetError(Exception):
    """Base class for errors raised by this package."""

    exit_code = EXIT_DATA


class ConfigError(CascadeNetError):
    """Bad configuration: unknown keys, invalid values, missing required settings."""

    exit_code = EXIT_USAGE


class ParseError(CascadeNetError):
    """Malformed input file content (bad date, non-numeric cell, duplicate row)."""


class DataError(CascadeNetError):
    """Input parsed but is unusable (too short, constant series, empty overlap)."""


class FetchError(CascadeNetError):
    """The remote quote service failed after the configured retries."""

    exit_code = EXIT_IO

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status
