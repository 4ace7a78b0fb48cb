"""Readers and writers for road networks, crash tables and prepared datasets."""

from __future__ import annotations

import csv
import json
import math
from collections.abc import Iterable, Sequence
from datetime import datetime
from pathlib import Path

import shapely

from ..errors import CrsError, DataError, RecordError, SchemaError
from .crashes import WEEKDAYS, EnrichedCrash, RawCrash
from .network import MIN_VERTEX_GAP, Intersection, RoadSegment, Street, geometry_problem

# crash table columns, named as in the source attribute table
CRASH_COLUMNS = {
    "crash_id": "Crash_ID",
    "crash_date": "Crash_DT",
    "crash_time": "Crash_TM",
    "age": "Age",
    "hour_of_day": "Crash_HOD",
    "day_of_week": "Crash_DOW",
    "month_of_year": "Crash_MOY",
    "year": "Crash_Y",
    "week_number": "Crash_WK",
    "fatalities": "Fatalities",
    "injuries": "Injury",
    "alcohol_related": "Alcohol_Related",
    "distraction_related": "Distraction_Related",
    "weather_condition": "Weather_Condition",
    "x": "X",
    "y": "Y",
}
ENRICHED_COLUMNS = ("SPATIAL_LABEL", "LABEL_KIND", "SEQUENCE", "SNAP_DIST")
ROAD_CSV_COLUMNS = ("segment_id", "name", "wkt")
DEFAULT_DATE_FORMAT = "%m/%d/%Y"
DEFAULT_WEATHER = ("Clear", "Cloudy", "Rain")

_YES = {"yes", "y", "true", "t", "1"}
_NO = {"no", "n", "false", "f", "0"}


def check_projected(coords: Iterable[tuple[float, float]], what: str) -> None:
    """Reject data that looks geodetic (every coordinate within +/-180)."""
    seen = False
    for x, y in coords:
        seen = True
        if abs(x) > 180 or abs(y) > 180:
            return
    if seen:
        raise CrsError(
            f"{what}: all coordinates lie within +/-180, which looks like longitude/latitude; "
            "reproject to a planar CRS in meters first"
        )


def _read_table(path: Path) -> tuple[list[str], list[dict[str, str]]]:
    with open(path, newline="", encoding="utf-8-sig") as fh:
        lines = (line for line in fh if not line.startswith("#"))
        reader = csv.DictReader(lines)
        rows = list(reader)
        return list(reader.fieldnames or []), rows


def _clean_coords(coords) -> tuple[tuple[float, float], ...]:
    out: list[tuple[float, float]] = []
    for c in coords:
        p = (float(c[0]), float(c[1]))
        if not out or math.dist(out[-1], p) > MIN_VERTEX_GAP:
            out.append(p)
    return tuple(out)


def _lines_of(geom_type: str, coordinates) -> list:
    if geom_type == "LineString":
        return [coordinates]
    if geom_type == "MultiLineString":
        return list(coordinates)
    raise ValueError(f"unsupported geometry type {geom_type}")


def _segments_from(seg_id: str, name: str, lines, problems: list) -> list[RoadSegment]:
    segs = []
    for k, line in enumerate(lines):
        sid = seg_id if len(lines) == 1 else f"{seg_id}.{k}"
        coords = _clean_coords(line)
        problem = geometry_problem(coords)
        if problem:
            problems.append((sid, problem))
            continue
        segs.append(RoadSegment(sid, name, coords))
    return segs


def read_roads(path: str | Path) -> list[RoadSegment]:
    """Read road segments from GeoJSON (``name`` property) or CSV (``segment_id,name,wkt``)."""
    path = Path(path)
    problems: list[tuple[str, str]] = []
    segments: list[RoadSegment] = []
    if path.suffix.lower() in (".geojson", ".json"):
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON ({exc})") from exc
        if doc.get("type") != "FeatureCollection":
            raise SchemaError(f"{path}: expected a GeoJSON FeatureCollection")
        for i, feat in enumerate(doc.get("features", [])):
            props = feat.get("properties") or {}
            seg_id = str(props.get("segment_id", feat.get("id", i)))
            geom = feat.get("geometry") or {}
            try:
                lines = _lines_of(geom.get("type", ""), geom.get("coordinates", []))
            except ValueError as exc:
                problems.append((seg_id, str(exc)))
                continue
            segments += _segments_from(seg_id, str(props.get("name") or ""), lines, problems)
    else:
        header, rows = _read_table(path)
        missing = [c for c in ROAD_CSV_COLUMNS if c not in header]
        if missing:
            raise SchemaError(f"{path}: road table schema mismatch", missing=missing)
        for row in rows:
            seg_id = row["segment_id"]
            try:
                geom = shapely.from_wkt(row["wkt"])
                lines = [shapely.get_coordinates(g) for g in shapely.get_parts(geom)]
                if shapely.get_type_id(geom) not in (1, 5):
                    raise ValueError(f"unsupported WKT geometry {geom.geom_type}")
            except (shapely.errors.ShapelyError, ValueError) as exc:
                problems.append((seg_id, f"bad WKT: {exc}"))
                continue
            segments += _segments_from(seg_id, row["name"], lines, problems)
    if problems:
        raise RecordError(problems)
    check_projected((c for s in segments for c in s.geometry), str(path))
    return segments


def _parse_time(text: str) -> tuple[int, int, int]:
    text = text.strip()
    if text.isdigit() and len(text) <= 4:
        text = text.zfill(4)
        return int(text[:2]), int(text[2:]), 0
    for fmt in ("%H:%M:%S", "%H:%M"):
        try:
            t = datetime.strptime(text, fmt)
            return t.hour, t.minute, t.second
        except ValueError:
            pass
    raise ValueError(f"unparseable crash time {text!r}")


def _parse_int(text: str, what: str) -> int:
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        value = float(text)
        if not value.is_integer():
            raise ValueError(f"{what} must be an integer, got {text!r}") from None
        return int(value)


def _parse_flag(text: str, what: str) -> bool:
    t = text.strip().lower()
    if t in _YES:
        return True
    if t in _NO:
        return False
    raise ValueError(f"{what} must be Yes/No, got {text!r}")


def _weekday(text: str) -> str:
    t = text.strip().lower()
    for name in WEEKDAYS:
        if t == name.lower() or (len(t) >= 3 and name.lower().startswith(t)):
            return name
    raise ValueError(f"unrecognized day of week {text!r}")


def parse_crash_row(
    row: dict[str, str],
    date_format: str = DEFAULT_DATE_FORMAT,
    weather_values: Sequence[str] = DEFAULT_WEATHER,
) -> RawCrash:
    if any(row.get(col) is None for col in CRASH_COLUMNS.values()):
        raise ValueError("row has fewer cells than the header")
    c = {field: row[col] for field, col in CRASH_COLUMNS.items()}
    date = datetime.strptime(c["crash_date"].strip(), date_format)
    hh, mm, ss = _parse_time(c["crash_time"])
    stamp = date.replace(hour=hh, minute=mm, second=ss)
    hod = _parse_int(c["hour_of_day"], "Crash_HOD")
    if hod != hh:
        raise ValueError(f"Crash_HOD {hod} disagrees with Crash_TM {c['crash_time']!r}")
    moy = _parse_int(c["month_of_year"], "Crash_MOY")
    if moy != stamp.month:
        raise ValueError(f"Crash_MOY {moy} disagrees with Crash_DT {c['crash_date']!r}")
    year = _parse_int(c["year"], "Crash_Y")
    if year != stamp.year:
        raise ValueError(f"Crash_Y {year} disagrees with Crash_DT {c['crash_date']!r}")
    dow = _weekday(c["day_of_week"])
    if dow != WEEKDAYS[stamp.weekday()]:
        raise ValueError(f"Crash_DOW {c['day_of_week']!r} disagrees with Crash_DT {c['crash_date']!r}")
    weather = {w.lower(): w for w in weather_values}.get(c["weather_condition"].strip().lower())
    if weather is None:
        raise ValueError(f"Weather_Condition {c['weather_condition']!r} not in {list(weather_values)}")
    fatalities = _parse_int(c["fatalities"], "Fatalities")
    injuries = _parse_int(c["injuries"], "Injury")
    if fatalities < 0 or injuries < 0:
        raise ValueError("negative Fatalities/Injury count")
    x, y = float(c["x"]), float(c["y"])
    if not (math.isfinite(x) and math.isfinite(y)):
        raise ValueError("non-finite coordinates")
    return RawCrash(
        crash_id=c["crash_id"].strip(),
        crash_date=c["crash_date"].strip(),
        crash_time=c["crash_time"].strip(),
        age=_parse_int(c["age"], "Age") if c["age"].strip() else None,
        hour_of_day=hod,
        day_of_week=dow,
        month_of_year=moy,
        year=year,
        week_number=_parse_int(c["week_number"], "Crash_WK"),
        fatalities=fatalities,
        injuries=injuries,
        alcohol_related=_parse_flag(c["alcohol_related"], "Alcohol_Related"),
        distraction_related=_parse_flag(c["distraction_related"], "Distraction_Related"),
        weather_condition=weather,
        x=x,
        y=y,
        timestamp=stamp,
        source_row=tuple((col, row[col]) for col in row if col not in ENRICHED_COLUMNS),
    )


def _check_header(path: Path, header: list[str], expected: Sequence[str]) -> None:
    missing = [c for c in expected if c not in header]
    extra = [c for c in header if c not in expected]
    if missing or extra:
        raise SchemaError(f"{path}: crash table schema mismatch", missing=missing, extra=extra)


def read_crashes(
    path: str | Path,
    date_format: str = DEFAULT_DATE_FORMAT,
    weather_values: Sequence[str] = DEFAULT_WEATHER,
) -> list[RawCrash]:
    path = Path(path)
    header, rows = _read_table(path)
    _check_header(path, header, list(CRASH_COLUMNS.values()))
    crashes, problems, seen = [], [], set()
    for lineno, row in enumerate(rows, start=2):
        rid = (row.get("Crash_ID") or "").strip() or f"line {lineno}"
        if rid in seen:
            problems.append((rid, "duplicate Crash_ID"))
            continue
        seen.add(rid)
        try:
            crashes.append(parse_crash_row(row, date_format, weather_values))
        except ValueError as exc:
            problems.append((rid, str(exc)))
    if problems:
        raise RecordError(problems)
    check_projected(((c.x, c.y) for c in crashes), str(path))
    return crashes


def _crash_cells(crash: RawCrash) -> dict[str, str]:
    if crash.source_row:
        return dict(crash.source_row)
    cells = {}
    for field, col in CRASH_COLUMNS.items():
        value = getattr(crash, field)
        if isinstance(value, bool):
            value = "Yes" if value else "No"
        cells[col] = "" if value is None else str(value)
    return cells


def write_crashes(
    path: str | Path,
    crashes: Iterable[RawCrash],
    digest: str | None = None,
    enriched: bool = False,
) -> None:
    crashes = list(crashes)
    columns = list(dict(crashes[0].source_row)) if crashes and crashes[0].source_row else list(CRASH_COLUMNS.values())
    if enriched:
        columns += list(ENRICHED_COLUMNS)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if digest:
            fh.write(f"# run_config_digest={digest}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for crash in crashes:
            cells = _crash_cells(crash)
            if enriched:
                assert isinstance(crash, EnrichedCrash)
                cells.update(
                    SPATIAL_LABEL=crash.spatial_label,
                    LABEL_KIND=crash.label_kind,
                    SEQUENCE=str(crash.sequence),
                    SNAP_DIST=f"{crash.snap_distance:.6f}",
                )
            writer.writerow([cells[c] for c in columns])


def read_enriched(
    path: str | Path,
    date_format: str = DEFAULT_DATE_FORMAT,
    weather_values: Sequence[str] = DEFAULT_WEATHER,
) -> list[EnrichedCrash]:
    path = Path(path)
    header, rows = _read_table(path)
    _check_header(path, header, list(CRASH_COLUMNS.values()) + list(ENRICHED_COLUMNS))
    out, problems = [], []
    for row in rows:
        try:
            raw = parse_crash_row(row, date_format, weather_values)
            out.append(
                EnrichedCrash(
                    **{k: getattr(raw, k) for k in RawCrash.__dataclass_fields__},
                    spatial_label=row["SPATIAL_LABEL"],
                    label_kind=row["LABEL_KIND"],
                    sequence=int(row["SEQUENCE"]),
                    snap_distance=float(row["SNAP_DIST"]),
                )
            )
        except ValueError as exc:
            problems.append((row.get("Crash_ID", "?"), str(exc)))
    if problems:
        raise RecordError(problems)
    return out


def _wkt_multilinestring(parts: Sequence[Sequence[tuple[float, float]]]) -> str:
    return "MULTILINESTRING (" + ", ".join(
        "(" + ", ".join(f"{x!r} {y!r}" for x, y in part) + ")" for part in parts
    ) + ")"


def write_streets(path: str | Path, streets: Iterable[Street], digest: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if digest:
            fh.write(f"# run_config_digest={digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["name", "total_length", "wkt"])
        for s in streets:
            w.writerow([s.name, repr(s.total_length), _wkt_multilinestring(s.parts)])


def read_streets(path: str | Path) -> list[Street]:
    _, rows = _read_table(Path(path))
    streets = []
    for row in rows:
        geom = shapely.from_wkt(row["wkt"])
        parts = tuple(
            tuple((float(x), float(y)) for x, y in shapely.get_coordinates(g)) for g in shapely.get_parts(geom)
        )
        streets.append(Street(row["name"], parts))
    return streets


def write_intersections(path: str | Path, intersections: Iterable[Intersection], digest: str | None = None) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if digest:
            fh.write(f"# run_config_digest={digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["INT_ID", "NAME", "X", "Y", "MEMBERS"])
        for it in intersections:
            x, y = it.location
            w.writerow([it.int_id, it.name, repr(x), repr(y), "|".join(it.member_streets)])


def read_intersections(path: str | Path) -> list[Intersection]:
    _, rows = _read_table(Path(path))
    return [
        Intersection(
            int_id=int(r["INT_ID"]),
            name=r["NAME"],
            location=(float(r["X"]), float(r["Y"])),
            member_streets=tuple(r["MEMBERS"].split("|")),
        )
        for r in rows
    ]
