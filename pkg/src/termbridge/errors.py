"""Error types shared across the package.

Every error carries a short machine-readable ``code`` (stable, uppercase)
plus a human message.  Parse errors additionally carry a 1-based line
number so batch logs point at the offending row.
"""

from __future__ import annotations


class TermbridgeError(Exception):
    """Base class; ``code`` is a stable uppercase identifier."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class ConfigError(TermbridgeError):
    """Bad run configuration (missing paths, out-of-range thresholds)."""


class ParseError(TermbridgeError):
    """Malformed input file content."""

    def __init__(self, code: str, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f" [{path}" + (f":{line}" if line is not None else "") + "]"
        super().__init__(code, message + loc)
        self.path = path
        self.line = line


class DataError(TermbridgeError):
    """Semantically invalid data that parsed fine (integrity violations)."""
