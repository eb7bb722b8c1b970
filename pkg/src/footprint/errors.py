"""Exception hierarchy shared by all footprint modules."""

from __future__ import annotations


class FootprintError(Exception):
    """Base class for every error raised on bad input or configuration."""


class SessionParseError(FootprintError):
    """A capture file could not be parsed into a browsing session.

    ``offset`` is a byte offset into the input, ``path`` a JSON path such as
    ``log.entries[3].request.url`` and ``line`` a 1-based line number; any of
    them may be ``None`` when not applicable.
    """

    def __init__(self, message: str, *, offset: int | None = None,
                 path: str | None = None, line: int | None = None):
        self.offset = offset
        self.path = path
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if offset is not None:
            where.append(f"byte offset {offset}")
        if path is not None:
            where.append(f"at {path}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class EmptySessionError(SessionParseError):
    def __init__(self, message: str = "empty session", **kwargs):
        super().__init__(message, **kwargs)


class TaxonomyError(FootprintError):
    pass


class EmptyProfileError(FootprintError):
    pass


class ConfigError(FootprintError):
    pass


class InvariantViolation(RuntimeError):
    """An internal consistency check failed; indicates a bug, not bad input."""
