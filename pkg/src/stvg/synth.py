"""Synthetic grid road networks and crash tables with planted hotspots.

Every crash first draws an hour slot (weighted by hour-of-day and weekday
multipliers), then a site: an intersection or a street. Sites carry a base
weight; a hotspot multiplies its site's weight while the crash time lies in
the hotspot's active window. Intersection crashes are placed exactly on the
intersection point, street crashes mid-block with a small lateral offset.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .errors import ArgumentError
from .roadprep.crashes import WEEKDAYS
from .roadprep.io import CRASH_COLUMNS

DEFAULT_ORIGIN = (500000.0, 3000000.0)  # UTM-like, so the CRS heuristic accepts it


@dataclass(frozen=True)
class Hotspot:
    """``target`` is ``int:ROW,COL`` for an intersection or a street name."""

    target: str
    multiplier: float
    active: tuple[date, date] | None = None

    @classmethod
    def parse(cls, text: str) -> Hotspot:
        """``TARGET@MULT`` or ``TARGET@MULT@START/END`` (dates as YYYY-MM-DD)."""
        parts = text.split("@")
        try:
            target, mult = parts[0], float(parts[1])
            active = None
            if len(parts) == 3:
                a, b = parts[2].split("/")
                active = (date.fromisoformat(a), date.fromisoformat(b))
            elif len(parts) != 2:
                raise ValueError
        except (ValueError, IndexError):
            raise ArgumentError(f"bad hotspot {text!r}; expected TARGET@MULT[@YYYY-MM-DD/YYYY-MM-DD]") from None
        return cls(target, mult, active)


@dataclass(frozen=True)
class SyntheticSpec:
    rows: int = 5
    cols: int = 5
    spacing: float = 200.0
    crashes: int = 1000
    start: date = date(2010, 1, 1)
    end: date = date(2015, 12, 31)
    hotspots: tuple[Hotspot, ...] = ()
    intersection_share: float = 0.3
    alcohol_p: float = 0.05
    distraction_p: float = 0.1
    fatal_p: float = 0.02
    weather_p: tuple[float, float, float] = (0.7, 0.2, 0.1)  # Clear, Cloudy, Rain
    hour_weights: tuple[float, ...] | None = None
    weekday_weights: tuple[float, ...] | None = None
    orphan_p: float = 0.0
    origin: tuple[float, float] = DEFAULT_ORIGIN
    seed: int = 0

    def __post_init__(self):
        if self.rows < 2 or self.cols < 2:
            raise ArgumentError("grid needs at least 2 rows and 2 columns")
        if self.spacing < 100:
            raise ArgumentError("spacing must be >= 100 m so mid-block crashes stay clear of intersections")
        probs = [self.intersection_share, self.alcohol_p, self.distraction_p, self.fatal_p, self.orphan_p]
        if any(not 0 <= p <= 1 for p in probs + list(self.weather_p)):
            raise ArgumentError("probabilities must lie in [0, 1]")
        if abs(sum(self.weather_p) - 1) > 1e-9:
            raise ArgumentError("weather probabilities must sum to 1")
        if self.hour_weights is not None and len(self.hour_weights) != 24:
            raise ArgumentError("hour_weights needs 24 entries")
        if self.weekday_weights is not None and len(self.weekday_weights) != 7:
            raise ArgumentError("weekday_weights needs 7 entries (Monday first)")
        if self.end < self.start:
            raise ArgumentError("end date is before start date")
        for h in self.hotspots:
            if h.multiplier < 0:
                raise ArgumentError("hotspot multiplier must be >= 0")

    def street_names(self) -> tuple[list[str], list[str]]:
        return [f"H{r} ST" for r in range(self.rows)], [f"V{c} AVE" for c in range(self.cols)]

    def intersection_point(self, row: int, col: int) -> tuple[float, float]:
        ox, oy = self.origin
        return ox + col * self.spacing, oy + row * self.spacing

    def intersection_id(self, row: int, col: int) -> int:
        """The id prep assigns: ids follow (y, x) order, i.e. row-major from the origin."""
        return row * self.cols + col + 1


@dataclass
class Site:
    kind: str  # "intersection" or "street"
    key: str  # "int:R,C" or street name
    weight: float
    row: int = -1
    col: int = -1


def sites(spec: SyntheticSpec) -> list[Site]:
    """Every crash site with its base weight; weights sum to 1."""
    horiz, vert = spec.street_names()
    n_int = spec.rows * spec.cols
    h_len = (spec.cols - 1) * spec.spacing
    v_len = (spec.rows - 1) * spec.spacing
    total = len(horiz) * h_len + len(vert) * v_len
    out = [
        Site("intersection", f"int:{r},{c}", spec.intersection_share / n_int, r, c)
        for r in range(spec.rows)
        for c in range(spec.cols)
    ]
    street_share = 1 - spec.intersection_share
    out += [Site("street", name, street_share * h_len / total, row=r) for r, name in enumerate(horiz)]
    out += [Site("street", name, street_share * v_len / total, col=c) for c, name in enumerate(vert)]
    return out


def site_weights(spec: SyntheticSpec, site_list: list[Site], when: datetime | None) -> np.ndarray:
    """Site weights at time ``when``, hotspot multipliers applied (all of them when ``when`` is None)."""
    w = np.array([s.weight for s in site_list])
    keys = [s.key for s in site_list]
    for h in spec.hotspots:
        if h.target not in keys:
            raise ArgumentError(f"hotspot target {h.target!r} is not a site of this grid")
        if when is None or h.active is None or h.active[0] <= when.date() <= h.active[1]:
            w[keys.index(h.target)] *= h.multiplier
    return w


def road_features(spec: SyntheticSpec) -> dict:
    """GeoJSON grid; each street is emitted block by block so prep must merge it."""
    horiz, vert = spec.street_names()
    feats = []
    for r, name in enumerate(horiz):
        for c in range(spec.cols - 1):
            a, b = spec.intersection_point(r, c), spec.intersection_point(r, c + 1)
            feats.append((name, [list(a), list(b)]))
    for c, name in enumerate(vert):
        for r in range(spec.rows - 1):
            a, b = spec.intersection_point(r, c), spec.intersection_point(r + 1, c)
            feats.append((name, [list(a), list(b)]))
    return {
        "type": "FeatureCollection",
        "features": [
            {
                "type": "Feature",
                "id": i,
                "properties": {"segment_id": f"S{i}", "name": name if i % 2 else f" {name.lower()} "},
                "geometry": {"type": "LineString", "coordinates": coords},
            }
            for i, (name, coords) in enumerate(feats)
        ],
    }


def _hour_slots(spec: SyntheticSpec) -> tuple[datetime, np.ndarray]:
    start = datetime(spec.start.year, spec.start.month, spec.start.day)
    n = ((spec.end - spec.start).days + 1) * 24
    hours = np.arange(n)
    weights = np.ones(n)
    hod = hours % 24
    if spec.hour_weights is not None:
        weights *= np.asarray(spec.hour_weights)[hod]
    if spec.weekday_weights is not None:
        dow = (start.weekday() + hours // 24) % 7
        weights *= np.asarray(spec.weekday_weights)[dow]
    return start, weights / weights.sum()


def generate_crashes(spec: SyntheticSpec) -> list[dict[str, str]]:
    rng = np.random.default_rng(spec.seed)
    start, slot_p = _hour_slots(spec)
    slots = np.sort(rng.choice(len(slot_p), size=spec.crashes, p=slot_p))
    minutes = rng.integers(0, 60, size=spec.crashes)
    when = [start + timedelta(hours=int(s), minutes=int(m)) for s, m in zip(slots, minutes)]
    # shuffle so crash ids carry no time order
    when = [when[i] for i in rng.permutation(spec.crashes)]

    site_list = sites(spec)
    weight_cache: dict[tuple[bool, ...], np.ndarray] = {}
    rows = []
    for i, t in enumerate(when):
        pattern = tuple(h.active is None or h.active[0] <= t.date() <= h.active[1] for h in spec.hotspots)
        if pattern not in weight_cache:
            w = site_weights(spec, site_list, t)
            weight_cache[pattern] = w / w.sum()
        site = site_list[rng.choice(len(site_list), p=weight_cache[pattern])]
        x, y = _place(spec, site, rng)
        weather = ("Clear", "Cloudy", "Rain")[rng.choice(3, p=spec.weather_p)]
        row = {
            "crash_id": str(i + 1),
            "crash_date": t.strftime("%m/%d/%Y"),
            "crash_time": t.strftime("%H:%M"),
            "age": str(int(rng.integers(16, 91))),
            "hour_of_day": str(t.hour),
            "day_of_week": WEEKDAYS[t.weekday()],
            "month_of_year": str(t.month),
            "year": str(t.year),
            "week_number": str(t.isocalendar()[1]),
            "fatalities": str(int(rng.random() < spec.fatal_p)),
            "injuries": str(int(rng.integers(0, 4))),
            "alcohol_related": "Yes" if rng.random() < spec.alcohol_p else "No",
            "distraction_related": "Yes" if rng.random() < spec.distraction_p else "No",
            "weather_condition": weather,
            "x": f"{x:.3f}",
            "y": f"{y:.3f}",
        }
        rows.append({CRASH_COLUMNS[k]: v for k, v in row.items()})
    return rows


def _place(spec: SyntheticSpec, site: Site, rng) -> tuple[float, float]:
    if site.kind == "intersection":
        return spec.intersection_point(site.row, site.col)
    along = rng.uniform(20.0, spec.spacing - 20.0)
    offset = rng.uniform(-8.0, 8.0)
    if rng.random() < spec.orphan_p:
        offset = 40.0 if offset >= 0 else -40.0
    if site.row >= 0:
        block = int(rng.integers(0, spec.cols - 1))
        x, y = spec.intersection_point(site.row, block)
        return x + along, y + offset
    block = int(rng.integers(0, spec.rows - 1))
    x, y = spec.intersection_point(block, site.col)
    return x + offset, y + along


def write_synthetic(spec: SyntheticSpec, out_dir: str | Path) -> tuple[Path, Path]:
    """Write ``roads.geojson`` and ``crashes.csv``; identical per seed."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    roads = out / "roads.geojson"
    roads.write_text(json.dumps(road_features(spec), sort_keys=True, indent=1) + "\n", encoding="utf-8")
    crashes = out / "crashes.csv"
    with open(crashes, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CRASH_COLUMNS.values()), lineterminator="\n")
        writer.writeheader()
        writer.writerows(generate_crashes(spec))
    return roads, crashes


__all__ = ["Hotspot", "Site", "SyntheticSpec", "generate_crashes", "road_features", "sites", "write_synthetic"]
