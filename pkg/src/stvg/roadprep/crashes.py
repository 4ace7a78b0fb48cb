"""Crash records, overlay onto connectivity neighborhoods, and temporal sequencing."""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from datetime import datetime

import numpy as np
import shapely

from ..errors import ArgumentError, RecordError
from .network import Neighborhood

TIE_TOLERANCE = 1e-9
WEEKDAYS = ("Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday", "Sunday")


@dataclass(frozen=True)
class RawCrash:
    crash_id: str
    crash_date: str
    crash_time: str
    age: int | None
    hour_of_day: int
    day_of_week: str
    month_of_year: int
    year: int
    week_number: int
    fatalities: int
    injuries: int
    alcohol_related: bool
    distraction_related: bool
    weather_condition: str
    x: float
    y: float
    timestamp: datetime | None = None
    # original CSV cells, written back verbatim in the enriched output
    source_row: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class EnrichedCrash(RawCrash):
    spatial_label: str = ""
    label_kind: str = ""
    snap_distance: float = 0.0
    sequence: int = 0


def crash_sort_key(crash_id: str):
    """Numeric ids compare as numbers and sort before non-numeric ones."""
    return (0, int(crash_id), "") if crash_id.isdigit() else (1, 0, crash_id)


def geo_enrich(
    crashes: Iterable[RawCrash], neighborhoods: Sequence[Neighborhood]
) -> tuple[list[EnrichedCrash], list[RawCrash]]:
    """Attach each crash to the nearest neighborhood center within its radius.

    At equal distance an intersection wins over a street, then the smaller
    label. Crashes with nothing in range are returned as orphans.
    """
    crashes = list(crashes)
    if not neighborhoods:
        raise ArgumentError("geo_enrich needs at least one neighborhood")
    if not crashes:
        return [], []

    centers = [
        shapely.Point(nb.center[0]) if len(nb.center) == 1 else shapely.LineString(nb.center)
        for nb in neighborhoods
    ]
    radii = np.array([nb.radius for nb in neighborhoods])
    tree = shapely.STRtree(centers)
    points = shapely.points(np.array([(c.x, c.y) for c in crashes], dtype=float))
    ci, ni = tree.query(points, predicate="dwithin", distance=float(radii.max()))
    dist = shapely.distance(points[ci], tree.geometries[ni])
    inside = dist <= radii[ni]
    ci, ni, dist = ci[inside], ni[inside], dist[inside]

    candidates: dict[int, list[tuple[float, int]]] = {}
    for c, n, d in zip(ci.tolist(), ni.tolist(), dist.tolist()):
        candidates.setdefault(c, []).append((d, n))

    enriched, orphans = [], []
    for idx, crash in enumerate(crashes):
        cands = candidates.get(idx)
        if not cands:
            orphans.append(crash)
            continue
        best = min(d for d, _ in cands)
        tied = [(d, n) for d, n in cands if d <= best + TIE_TOLERANCE]
        d, n = min(
            tied,
            key=lambda dn: (
                neighborhoods[dn[1]].kind != "intersection",
                str(neighborhoods[dn[1]].label),
                dn[0],
            ),
        )
        hood = neighborhoods[n]
        enriched.append(
            EnrichedCrash(
                **_raw_fields(crash),
                spatial_label=str(hood.label),
                label_kind=hood.kind,
                snap_distance=d,
            )
        )
    return enriched, orphans


def _raw_fields(crash: RawCrash) -> dict:
    return {f.name: getattr(crash, f.name) for f in dataclasses.fields(RawCrash)}


def sequence_crashes(crashes: Iterable[EnrichedCrash]) -> list[EnrichedCrash]:
    """Rank crashes 1..N by (timestamp, crash_id) and return them in that order."""
    crashes = list(crashes)
    bad = [(c.crash_id, "unparseable timestamp") for c in crashes if c.timestamp is None]
    if bad:
        raise RecordError(bad)
    ordered = sorted(crashes, key=lambda c: (c.timestamp, crash_sort_key(c.crash_id)))
    return [dataclasses.replace(c, sequence=i) for i, c in enumerate(ordered, start=1)]
