"""Hierarchical calendar index: Root -> Year -> Month -> Day -> Hour.

Nodes are numbered level by level in chronological order, so the Hour
leaves of any time interval form one contiguous id range. Graph assembly
reuses these ids unchanged (the tree occupies ids ``0 .. len(tree) - 1``).
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from collections.abc import Sequence
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from functools import cached_property

from ..errors import ArgumentError

LEVELS = ("Root", "Year", "Month", "Day", "Hour")
_ONE_HOUR = timedelta(hours=1)

Key = tuple[int, ...]


def floor_hour(ts: datetime) -> datetime:
    return ts.replace(minute=0, second=0, microsecond=0)


@dataclass(frozen=True, eq=False)
class TimeTree:
    keys: tuple[Key, ...]  # () for Root, (y,), (y, m), (y, m, d), (y, m, d, h)
    parent: tuple[int, ...]  # -1 for Root
    children: tuple[tuple[int, ...], ...]
    hour_index: dict[Key, int] = field(repr=False)
    root: int = 0

    @classmethod
    def from_keys(cls, keys: Sequence[Key]) -> TimeTree:
        """Rebuild a tree from its node keys, which must be in canonical order."""
        keys = tuple(tuple(k) for k in keys)
        if not keys or keys[0] != ():
            raise ArgumentError("time tree must start with the Root key")
        position = {k: i for i, k in enumerate(keys)}
        parent = [-1] + [position[k[:-1]] for k in keys[1:]]
        children: list[list[int]] = [[] for _ in keys]
        for i, p in enumerate(parent):
            if p >= 0:
                children[p].append(i)
        hours = {k: i for i, k in enumerate(keys) if len(k) == 4}
        return cls(keys, tuple(parent), tuple(tuple(c) for c in children), hours)

    def __len__(self) -> int:
        return len(self.keys)

    def __eq__(self, other) -> bool:
        return isinstance(other, TimeTree) and self.keys == other.keys

    def level(self, node: int) -> str:
        return LEVELS[len(self.keys[node])]

    def nodes_at(self, level: str) -> list[int]:
        depth = LEVELS.index(level)
        return [i for i, k in enumerate(self.keys) if len(k) == depth]

    @property
    def contains_edges(self) -> list[tuple[int, int]]:
        return [(p, i) for i, p in enumerate(self.parent) if p >= 0]

    @property
    def next_edges(self) -> list[tuple[int, int]]:
        """Consecutive nodes of each level, chained across parent boundaries."""
        out = []
        for a, b in zip(range(1, len(self.keys)), range(2, len(self.keys))):
            if len(self.keys[a]) == len(self.keys[b]):
                out.append((a, b))
        return out

    @cached_property
    def hour_range(self) -> range:
        """All Hour leaf ids, in chronological order."""
        ids = self.hour_index.values()
        return range(min(ids), max(ids) + 1) if ids else range(0)

    @property
    def span(self) -> tuple[datetime, datetime]:
        hours = self.hour_range
        return self.hour_time(hours[0]), self.hour_time(hours[-1])

    def hour_time(self, node: int) -> datetime:
        y, m, d, h = self.keys[node]
        return datetime(y, m, d, h)

    def hour_of(self, ts: datetime) -> int | None:
        return self.hour_index.get((ts.year, ts.month, ts.day, ts.hour))

    def descend(self, ts: datetime, side: str) -> int | None:
        """Walk CONTAINS edges from Root toward ``ts``.

        ``side="first"`` returns the earliest Hour leaf at or after ``ts``;
        ``side="last"`` the latest leaf at or before it. None when no such
        leaf exists in the tree.
        """
        target = (ts.year, ts.month, ts.day, ts.hour)
        node = self.root
        for depth in range(1, 5):
            kids = self.children[node]
            if not kids:
                return None
            prefix = target[:depth]
            kid_keys = [self.keys[c] for c in kids]
            if side == "first":
                i = bisect_left(kid_keys, prefix)
                if i == len(kids):
                    return None  # the span is contiguous, so nothing later exists
                if kid_keys[i] != prefix:
                    return self._outer_leaf(kids[i], "first")
            else:
                i = bisect_right(kid_keys, prefix) - 1
                if i < 0:
                    return None
                if kid_keys[i] != prefix:
                    return self._outer_leaf(kids[i], "last")
            node = kids[i]
        return node

    def _outer_leaf(self, node: int, side: str) -> int:
        while self.children[node]:
            node = self.children[node][0 if side == "first" else -1]
        return node


def _as_datetime(value: date | datetime, end: bool) -> datetime:
    if isinstance(value, datetime):
        return value
    # a bare date covers the whole day
    return datetime(value.year, value.month, value.day, 23 if end else 0)


def build_time_tree(start: date | datetime, end: date | datetime) -> TimeTree:
    """Tree spanning every hour from floor(start) to floor(end), inclusive.

    Plain dates are widened to whole days, so ``date(2015, 12, 31)`` as the
    end includes that day's 23:00 hour.
    """
    start, end = _as_datetime(start, end=False), _as_datetime(end, end=True)
    if start > end:
        raise ArgumentError(f"time tree start {start} is after end {end}")
    first, last = floor_hour(start), floor_hour(end)
    hours: list[Key] = []
    t = first
    while t <= last:
        hours.append((t.year, t.month, t.day, t.hour))
        t += _ONE_HOUR
    days = sorted({h[:3] for h in hours})
    months = sorted({h[:2] for h in hours})
    years = sorted({h[:1] for h in hours})
    return TimeTree.from_keys([(), *years, *months, *days, *hours])
