"""Exception hierarchy.

Each error class carries the CLI exit code it maps to, so the command layer
never has to guess: 2 usage, 3 data/schema, 4 build.
"""

from __future__ import annotations

from collections.abc import Iterable


class StvgError(Exception):
    exit_code = 1


class ArgumentError(StvgError, ValueError):
    """Bad argument to an engine call (unknown node, reversed span, ...)."""

    exit_code = 2


class DataError(StvgError):
    exit_code = 3


class SchemaError(DataError):
    def __init__(self, message: str, missing: Iterable[str] = (), extra: Iterable[str] = ()):
        self.missing = list(missing)
        self.extra = list(extra)
        parts = [message]
        if self.missing:
            parts.append("missing columns: " + ", ".join(self.missing))
        if self.extra:
            parts.append("unexpected columns: " + ", ".join(self.extra))
        super().__init__("; ".join(parts))


class CrsError(DataError):
    pass


class RecordError(DataError):
    """One or more input records are invalid.

    ``problems`` is a list of ``(record_id, reason)`` pairs so callers can
    report every offending record at once instead of failing on the first.
    """

    def __init__(self, problems: Iterable[tuple[str, str]]):
        self.problems = list(problems)
        shown = "; ".join(f"{rid}: {why}" for rid, why in self.problems[:20])
        more = len(self.problems) - 20
        if more > 0:
            shown += f"; ... and {more} more"
        super().__init__(f"{len(self.problems)} invalid record(s): {shown}")

    @property
    def record_ids(self) -> list[str]:
        return [rid for rid, _ in self.problems]


class BuildError(StvgError):
    exit_code = 4

    def __init__(self, message: str, record_ids: Iterable[str] = ()):
        self.record_ids = list(record_ids)
        if self.record_ids:
            head = ", ".join(self.record_ids[:20])
            if len(self.record_ids) > 20:
                head += f", ... ({len(self.record_ids)} total)"
            message = f"{message}: {head}"
        super().__init__(message)


class SnapshotError(DataError):
    code = "format"


class SnapshotVersionError(SnapshotError):
    code = "version"


class SnapshotTruncatedError(SnapshotError):
    code = "truncated"


class SnapshotChecksumError(SnapshotError):
    code = "checksum"
