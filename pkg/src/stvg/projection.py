"""Time-windowed, filter-restricted subgraph footprints.

A footprint is a set of id arrays over the immutable graph, never a copy.
Hour leaves come from descending the time tree; crashes attached to those
leaves come from a HAPPENS_AT index keyed by hour id.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from functools import cached_property

import numpy as np

from .core.graph import (
    CONNECTS,
    CRASH,
    HAPPENS_AT,
    INTERSECTION,
    KIND_CODE,
    LOCATED_AT,
    NEXT_EVENT,
    NODE_LABELS,
    STREET,
    StvgGraph,
)
from .core.timetree import TimeTree, floor_hour
from .errors import ArgumentError
from .roadprep.crashes import WEEKDAYS

GRANULARITIES = ("hour-of-day", "day-of-week", "month", "year")
DAY_CLASSES = ("weekday", "weekend")


@dataclass(frozen=True)
class TimeWindow:
    start: datetime
    end: datetime  # the whole end hour is included
    granularity: str = "custom"

    def __post_init__(self):
        if self.start > self.end:
            raise ArgumentError(f"window start {self.start} is after end {self.end}")

    @classmethod
    def full(cls, tree: TimeTree) -> TimeWindow:
        start, end = tree.span
        return cls(start, end, "custom")

    @classmethod
    def parse(cls, text: str, tree: TimeTree | None = None) -> TimeWindow:
        """Parse ``2014``, ``2010:2015``, ``2014-03``, ``2014-03-01T00..2014-03-07T23`` and friends.

        ``all`` means the whole span of ``tree``.
        """
        text = text.strip()
        if text == "all":
            if tree is None:
                raise ArgumentError("window 'all' needs a time tree")
            return cls.full(tree)
        for sep in ("..", ":"):
            if sep in text:
                a, b = text.split(sep, 1)
                start, _ = _token(a)
                _, end = _token(b)
                return cls(start, end, "custom")
        start, end = _token(text)
        gran = {4: "year", 7: "month", 10: "day", 13: "hour"}[len(text)]
        return cls(start, end, gran)


_TOKEN = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2})(?:T(\d{2}))?)?)?$")


def _token(text: str) -> tuple[datetime, datetime]:
    """First and last hour covered by one calendar token."""
    m = _TOKEN.match(text.strip())
    if not m:
        raise ArgumentError(f"bad window token {text!r}; use YYYY, YYYY-MM, YYYY-MM-DD or YYYY-MM-DDTHH")
    y, mo, d, h = (int(g) if g else None for g in m.groups())
    try:
        if mo is None:
            return datetime(y, 1, 1), datetime(y, 12, 31, 23)
        if d is None:
            nxt = datetime(y + 1, 1, 1) if mo == 12 else datetime(y, mo + 1, 1)
            return datetime(y, mo, 1), nxt - timedelta(hours=1)
        if h is None:
            return datetime(y, mo, d), datetime(y, mo, d, 23)
        return datetime(y, mo, d, h), datetime(y, mo, d, h)
    except ValueError as exc:
        raise ArgumentError(f"bad window token {text!r}: {exc}") from None


def _default_age():
    return {"teen": (16, 19), "adult": (20, 64), "elderly": (65, None)}


def _default_hour():
    return {"morning": (6, 11), "afternoon": (12, 17), "night": (18, 5)}


@dataclass(frozen=True)
class Bands:
    """Named age and hour-of-day bands; hour bands with start > end wrap past midnight."""

    age: dict[str, tuple[int, int | None]] = field(default_factory=_default_age)
    hour: dict[str, tuple[int, int | None]] = field(default_factory=_default_hour)

    def hour_set(self, name: str) -> set[int]:
        if name not in self.hour:
            raise ArgumentError(f"unknown hour band {name!r}; known: {sorted(self.hour)}")
        lo, hi = self.hour[name]
        hi = 23 if hi is None else hi
        return set(range(lo, hi + 1)) if lo <= hi else set(range(lo, 24)) | set(range(0, hi + 1))

    def age_range(self, name: str) -> tuple[int, float]:
        if name not in self.age:
            raise ArgumentError(f"unknown age band {name!r}; known: {sorted(self.age)}")
        lo, hi = self.age[name]
        return lo, float("inf") if hi is None else hi


def _meet(a: frozenset | None, b: frozenset | None) -> frozenset | None:
    if a is None:
        return b
    if b is None:
        return a
    return a & b


@dataclass(frozen=True)
class CrashFilter:
    """Conjunction of crash predicates; every unset field accepts everything.

    Set-valued fields list the accepted values, so the conjunction of two
    filters is again a filter (``f1 & f2``).
    """

    alcohol: bool = False
    distraction: bool = False
    weather: frozenset[str] | None = None
    fatal: bool = False
    age_bands: frozenset[str] | None = None
    day_classes: frozenset[str] | None = None
    hour_bands: frozenset[str] | None = None

    @classmethod
    def make(
        cls,
        alcohol: bool = False,
        distraction: bool = False,
        weather: str | None = None,
        fatal: bool = False,
        age_band: str | None = None,
        day_class: str | None = None,
        hour_band: str | None = None,
    ) -> CrashFilter:
        if day_class is not None and day_class not in DAY_CLASSES:
            raise ArgumentError(f"day class must be one of {DAY_CLASSES}, got {day_class!r}")
        one = lambda v: None if v is None else frozenset([v])  # noqa: E731
        return cls(alcohol, distraction, one(weather), fatal, one(age_band), one(day_class), one(hour_band))

    def __and__(self, other: CrashFilter) -> CrashFilter:
        return CrashFilter(
            self.alcohol or other.alcohol,
            self.distraction or other.distraction,
            _meet(self.weather, other.weather),
            self.fatal or other.fatal,
            _meet(self.age_bands, other.age_bands),
            _meet(self.day_classes, other.day_classes),
            _meet(self.hour_bands, other.hour_bands),
        )

    @property
    def is_empty(self) -> bool:
        return self == CrashFilter()

    def describe(self) -> dict:
        out = {}
        for k in ("alcohol", "distraction", "fatal"):
            if getattr(self, k):
                out[k] = True
        for k in ("weather", "age_bands", "day_classes", "hour_bands"):
            v = getattr(self, k)
            if v is not None:
                out[k] = sorted(v)
        return out


class CrashIndex:
    """Column arrays over Crash nodes in sequence order, plus the hour index."""

    def __init__(self, graph: StvgGraph):
        crash_nodes = graph.ids_with_label(CRASH)
        n = len(crash_nodes)
        self.node = crash_nodes
        pos = np.full(len(graph.nodes), -1, dtype=np.int64)
        pos[crash_nodes] = np.arange(n)
        self.position = pos

        kind, src, dst = graph.edge_kind, graph.edge_source, graph.edge_target
        self.hour = np.full(n, -1, dtype=np.int64)
        self.place = np.full(n, -1, dtype=np.int64)
        self.loc_edge = np.full(n, -1, dtype=np.int64)
        self.next_edge = np.full(n, -1, dtype=np.int64)
        for code, target, col in (
            (KIND_CODE[HAPPENS_AT], self.hour, dst),
            (KIND_CODE[LOCATED_AT], self.place, dst),
        ):
            e = np.flatnonzero(kind == code)
            target[pos[src[e]]] = col[e]
        e = np.flatnonzero(kind == KIND_CODE[LOCATED_AT])
        self.loc_edge[pos[src[e]]] = e
        e = np.flatnonzero(kind == KIND_CODE[NEXT_EVENT])
        self.next_edge[pos[src[e]]] = e
        if n and np.any(np.diff(self.hour) < 0):
            raise ArgumentError("crash nodes are not in time order; graph was not built by assemble_graph")

        props = [graph.nodes[i].properties for i in crash_nodes]
        self.alcohol = np.array([bool(p["alcohol_related"]) for p in props], dtype=bool)
        self.distraction = np.array([bool(p["distraction_related"]) for p in props], dtype=bool)
        self.weather = np.array([p["weather_condition"] for p in props], dtype=object)
        self.fatalities = np.array([p["fatalities"] for p in props], dtype=np.int64)
        self.age = np.array([np.nan if p["age"] is None else p["age"] for p in props], dtype=float)
        self.weekday = np.array([WEEKDAYS.index(p["day_of_week"]) for p in props], dtype=np.int64)
        self.hour_of_day = np.array([p["hour_of_day"] for p in props], dtype=np.int64)
        self.month = np.array([p["month_of_year"] for p in props], dtype=np.int64)
        self.year = np.array([p["year"] for p in props], dtype=np.int64)

        c = np.flatnonzero(kind == KIND_CODE[CONNECTS])
        order = np.argsort(dst[c], kind="stable")
        self.conn_edge = c[order]
        self.conn_street = src[c][order]
        self.conn_int = dst[c][order]

    def __len__(self) -> int:
        return len(self.node)

    def hour_slice(self, hours: range) -> slice:
        if len(hours) == 0:
            return slice(0, 0)
        lo = np.searchsorted(self.hour, hours[0], side="left")
        hi = np.searchsorted(self.hour, hours[-1], side="right")
        return slice(int(lo), int(hi))

    def mask(self, flt: CrashFilter, bands: Bands, rows: slice | np.ndarray = slice(None)) -> np.ndarray:
        keep = np.ones(len(self.node[rows]), dtype=bool)
        if flt.alcohol:
            keep &= self.alcohol[rows]
        if flt.distraction:
            keep &= self.distraction[rows]
        if flt.fatal:
            keep &= self.fatalities[rows] >= 1
        if flt.weather is not None:
            keep &= np.isin(self.weather[rows], list(flt.weather))
        if flt.age_bands is not None:
            age = self.age[rows]
            ok = np.zeros_like(keep)
            for name in flt.age_bands:
                lo, hi = bands.age_range(name)
                ok |= (age >= lo) & (age <= hi)
            keep &= ok
        if flt.day_classes is not None:
            weekend = self.weekday[rows] >= 5
            ok = np.zeros_like(keep)
            if "weekend" in flt.day_classes:
                ok |= weekend
            if "weekday" in flt.day_classes:
                ok |= ~weekend
            keep &= ok
        if flt.hour_bands is not None:
            hours = set()
            for name in flt.hour_bands:
                hours |= bands.hour_set(name)
            keep &= np.isin(self.hour_of_day[rows], sorted(hours))
        return keep


def crash_index(graph: StvgGraph) -> CrashIndex:
    idx = graph.cache.get("crash_index")
    if idx is None:
        idx = graph.cache["crash_index"] = CrashIndex(graph)
    return idx


@dataclass(frozen=True, eq=False)
class SubgraphFootprint:
    graph: StvgGraph = field(repr=False)
    window: TimeWindow | None
    filter: CrashFilter
    crash_ids: np.ndarray
    spatial_ids: np.ndarray
    edge_ids: np.ndarray

    @cached_property
    def node_ids(self) -> np.ndarray:
        return np.union1d(self.crash_ids, self.spatial_ids)

    @property
    def edge_sources(self) -> np.ndarray:
        return self.graph.edge_source[self.edge_ids]

    @property
    def edge_targets(self) -> np.ndarray:
        return self.graph.edge_target[self.edge_ids]

    def edges_of_kind(self, *kinds: str) -> np.ndarray:
        codes = [KIND_CODE[k] for k in kinds]
        return self.edge_ids[np.isin(self.graph.edge_kind[self.edge_ids], codes)]

    def spatial_of_class(self, target_class: str) -> np.ndarray:
        label = _class_label(target_class)
        labels = self.graph.label_array[self.spatial_ids]
        return self.spatial_ids[labels == NODE_LABELS.index(label)]

    def adjacency(self) -> dict[int, list[int]]:
        """Incident retained edge ids per footprint node, ascending."""
        adj: dict[int, list[int]] = {int(n): [] for n in self.node_ids}
        for e, s, t in zip(self.edge_ids.tolist(), self.edge_sources.tolist(), self.edge_targets.tolist()):
            adj[s].append(e)
            if t != s:
                adj[t].append(e)
        return adj

    def __len__(self) -> int:
        return len(self.node_ids)


def _class_label(target_class: str) -> str:
    try:
        return {"street": STREET, "intersection": INTERSECTION}[target_class]
    except KeyError:
        raise ArgumentError(f"target class must be 'street' or 'intersection', got {target_class!r}") from None


def resolve_window(tree: TimeTree, window: TimeWindow) -> range:
    """Hour leaf ids inside ``window``, found by descending CONTAINS from Root."""
    first = tree.descend(floor_hour(window.start), "first")
    last = tree.descend(floor_hour(window.end), "last")
    if first is None or last is None or first > last:
        return range(0)
    return range(first, last + 1)


def _footprint(graph, index: CrashIndex, rows: np.ndarray, window, flt) -> SubgraphFootprint:
    selected = np.zeros(len(index) + 1, dtype=bool)
    selected[rows] = True
    crash_ids = index.node[rows]
    places = np.unique(index.place[rows])
    conn = np.isin(index.conn_int, places)
    spatial = np.union1d(places, index.conn_street[conn])
    chained = rows[selected[rows + 1]]  # crash and its successor both kept
    edges = np.concatenate([index.loc_edge[rows], index.next_edge[chained], index.conn_edge[conn]])
    return SubgraphFootprint(graph, window, flt, crash_ids, spatial, np.sort(edges))


def project(
    graph: StvgGraph,
    window: TimeWindow | None = None,
    flt: CrashFilter | None = None,
    bands: Bands | None = None,
) -> SubgraphFootprint:
    """Footprint of the crashes in ``window`` (whole span if None) that pass ``flt``.

    Retained edges: LOCATED_AT of the kept crashes, NEXT_EVENT between kept
    crashes, and CONNECTS of every kept intersection (whose member streets
    join the footprint).
    """
    flt = flt or CrashFilter()
    bands = bands or Bands()
    window = window or TimeWindow.full(graph.time_tree)
    index = crash_index(graph)
    span = index.hour_slice(resolve_window(graph.time_tree, window))
    rows = np.arange(span.start, span.stop)[index.mask(flt, bands, span)]
    return _footprint(graph, index, rows, window, flt)


def bucket_values(graph: StvgGraph, granularity: str) -> list:
    if granularity == "hour-of-day":
        return list(range(24))
    if granularity == "day-of-week":
        return list(WEEKDAYS)
    if granularity == "month":
        return list(range(1, 13))
    if granularity == "year":
        return [k[0] for k in graph.time_tree.keys if len(k) == 1]
    raise ArgumentError(f"granularity must be one of {GRANULARITIES}, got {granularity!r}")


def sweep(
    graph: StvgGraph,
    granularity: str,
    flt: CrashFilter | None = None,
    bands: Bands | None = None,
) -> list[tuple[object, SubgraphFootprint]]:
    """One footprint per calendar bucket; the buckets partition the filtered crashes."""
    flt = flt or CrashFilter()
    bands = bands or Bands()
    buckets = bucket_values(graph, granularity)
    index = crash_index(graph)
    rows = np.flatnonzero(index.mask(flt, bands))
    column = {
        "hour-of-day": index.hour_of_day,
        "day-of-week": index.weekday,
        "month": index.month,
        "year": index.year,
    }[granularity][rows]
    window = TimeWindow.full(graph.time_tree)
    out = []
    for i, bucket in enumerate(buckets):
        value = i if granularity == "day-of-week" else bucket
        out.append((bucket, _footprint(graph, index, rows[column == value], window, flt)))
    return out


__all__ = [
    "Bands",
    "CrashFilter",
    "SubgraphFootprint",
    "TimeWindow",
    "bucket_values",
    "crash_index",
    "project",
    "resolve_window",
    "sweep",
]
