"""Exception types shared across the package.

Every error carries an ``exit_code`` so the CLI can map failures to
distinct process exit statuses.
"""

from __future__ import annotations


class StancepolError(Exception):
    exit_code = 1


class ParseError(StancepolError):
    """A tweet line could not be turned into a record."""

    exit_code = 3

    def __init__(self, kind: str, lineno: int | None = None, detail: str = ""):
        self.kind = kind
        self.lineno = lineno
        self.detail = detail
        where = f"line {lineno}: " if lineno is not None else ""
        msg = f"{where}{kind}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class FormatError(StancepolError):
    exit_code = 3

    def __init__(self, lineno: int | None, detail: str):
        self.lineno = lineno
        self.detail = detail
        where = f"line {lineno}: " if lineno is not None else ""
        super().__init__(f"{where}{detail}")


class ConflictError(StancepolError):
    exit_code = 4

    def __init__(self, handle: str, first: str, second: str):
        self.handle = handle
        super().__init__(f"conflicting labels for {handle!r}: {first} vs {second}")


class MissingSeedError(StancepolError):
    exit_code = 5


class InsufficientDataError(StancepolError):
    exit_code = 6


class InsufficientUsersError(StancepolError):
    exit_code = 6

    def __init__(self, label: str, available: int, requested: int):
        self.label = label
        self.available = available
        self.requested = requested
        super().__init__(
            f"class {label}: requested {requested} users but only {available} available"
        )


class GraphTooLargeError(StancepolError):
    exit_code = 7


class DomainError(StancepolError, ValueError):
    exit_code = 8


class DegenerateError(StancepolError):
    exit_code = 9


class MissingNodeError(StancepolError):
    exit_code = 10

    def __init__(self, handle: str):
        self.handle = handle
        super().__init__(f"no entry for node {handle!r}")


class MissingInputError(StancepolError):
    exit_code = 11

    def __init__(self, path: str):
        self.path = path
        super().__init__(f"input not found: {path}")
