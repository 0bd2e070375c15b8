"""Error hierarchy shared by all pipeline stages.

Two error families map onto the CLI exit codes: format errors (exit 2)
mean an input file could not be decoded at all; validation errors
(exit 3) mean the file decoded fine but its content violates a domain
invariant (dangling references, zero-area boxes, dimension mismatches).
"""

from __future__ import annotations

EXIT_OK = 0
EXIT_FORMAT_ERROR = 2
EXIT_VALIDATION_ERROR = 3


class PipelineError(Exception):
    """Base class for all structured pipeline errors."""

    exit_code = EXIT_VALIDATION_ERROR


class FormatError(PipelineError):
    """An input file is syntactically unreadable (exit code 2)."""

    exit_code = EXIT_FORMAT_ERROR


class MagicMismatchError(FormatError):
    """File does not start with the expected magic bytes."""

    def __init__(self, expected: bytes, found: bytes, path: str | None = None):
        self.expected = expected
        self.found = found
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(
            f"bad magic{where}: expected {expected!r}, found {found!r}"
        )


class TruncatedFileError(FormatError):
    """File ended before a complete structure could be read."""

    def __init__(self, offset: int, needed: int, available: int, path: str | None = None):
        self.offset = offset
        self.needed = needed
        self.available = available
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(
            f"truncated file{where}: needed {needed} bytes at offset {offset}, "
            f"only {available} available"
        )


class TrailingDataError(FormatError):
    """File holds more bytes than its declared record count accounts for."""

    def __init__(self, offset: int, path: str | None = None):
        self.offset = offset
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"trailing data{where} after declared records at offset {offset}")


class NonFiniteValueError(FormatError):
    """A stored float is NaN or infinite."""

    def __init__(self, context: str, path: str | None = None):
        self.context = context
        self.path = path
        where = f" in {path}" if path else ""
        super().__init__(f"non-finite value{where}: {context}")


class ValidationError(PipelineError):
    """Input decoded fine but violates a domain invariant (exit code 3)."""


class MalformedGridError(ValidationError):
    """Probability grid has wrong cell/box/class counts or out-of-range values."""


class ZeroAreaBoxError(ValidationError):
    """A candidate box has zero area; overlap ratios would be undefined."""

    def __init__(self, index: int, context: str = "candidate"):
        self.index = index
        super().__init__(f"zero-area box at {context} index {index}")


class TrainingError(ValidationError):
    """Training preconditions violated (single class, mixed dims, bad values)."""
