"""Batch orchestration: raw files -> prepared dataset -> graph snapshot."""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path

from .config import RunConfig
from .core.graph import StvgGraph, assemble_graph
from .core.snapshot import save_snapshot
from .core.timetree import build_time_tree
from .errors import BuildError, DataError
from .roadprep import (
    EnrichedCrash,
    Intersection,
    RawCrash,
    Street,
    build_neighborhoods,
    extract_intersections,
    geo_enrich,
    lixelize,
    merge_segments,
    sequence_crashes,
)
from .roadprep import io as rio

log = logging.getLogger(__name__)

ENRICHED_FILE = "enriched_crashes.csv"
ORPHANS_FILE = "orphans.csv"
STREETS_FILE = "streets.csv"
INTERSECTIONS_FILE = "intersections.csv"
REPORT_FILE = "prep_report.json"
CONFIG_FILE = "run_config.txt"
SNAPSHOT_FILE = "graph.stvg"


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_json(path: str | Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class PreparedDataset:
    streets: list[Street]
    intersections: list[Intersection]
    enriched: list[EnrichedCrash]
    orphans: list[RawCrash]
    report: dict = field(default_factory=dict)


def prepare(roads_path: str | Path, crashes_path: str | Path, config: RunConfig) -> PreparedDataset:
    """Run merge -> intersections -> lixels -> neighborhoods -> enrich -> sequence."""
    segments = rio.read_roads(roads_path)
    crashes = rio.read_crashes(crashes_path, config.date_format, config.weather_list)
    streets = merge_segments(segments)
    intersections = extract_intersections(streets, config.dedup_epsilon) if len(streets) >= 2 else []
    lixels = [lx for s in streets for lx in lixelize(s, config.lixel_length)]
    hoods = build_neighborhoods(lixels, intersections, config.connectivity_radius)
    enriched, orphans = geo_enrich(crashes, hoods)
    enriched = sequence_crashes(enriched)
    log.info(
        "prepared %d streets, %d intersections, %d lixels; %d crashes enriched, %d orphaned",
        len(streets), len(intersections), len(lixels), len(enriched), len(orphans),
    )
    report = {
        "config_digest": config.digest,
        "inputs": {
            "roads": {"name": Path(roads_path).name, "sha256": file_digest(roads_path)},
            "crashes": {"name": Path(crashes_path).name, "sha256": file_digest(crashes_path)},
        },
        "counts": {
            "segments": len(segments),
            "streets": len(streets),
            "intersections": len(intersections),
            "lixels": len(lixels),
            "neighborhoods": len(hoods),
            "crashes": len(crashes),
            "enriched": len(enriched),
            "orphans": len(orphans),
            "enriched_at_streets": sum(c.label_kind == "street" for c in enriched),
            "enriched_at_intersections": sum(c.label_kind == "intersection" for c in enriched),
        },
        "orphan_ids": [c.crash_id for c in orphans],
    }
    return PreparedDataset(streets, intersections, enriched, orphans, report)


def write_prepared(ds: PreparedDataset, out_dir: str | Path, config: RunConfig) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    digest = config.digest
    rio.write_crashes(out / ENRICHED_FILE, ds.enriched, digest, enriched=True)
    rio.write_crashes(out / ORPHANS_FILE, ds.orphans, digest)
    rio.write_streets(out / STREETS_FILE, ds.streets, digest)
    rio.write_intersections(out / INTERSECTIONS_FILE, ds.intersections, digest)
    (out / CONFIG_FILE).write_text(config.to_text(), encoding="utf-8")
    write_json(out / REPORT_FILE, ds.report)


def load_prepared(prep_dir: str | Path, config: RunConfig) -> PreparedDataset:
    prep = Path(prep_dir)
    for name in (ENRICHED_FILE, STREETS_FILE, INTERSECTIONS_FILE):
        if not (prep / name).exists():
            raise DataError(f"{prep}: not a prepared dataset (missing {name}); run prep first")
    enriched = rio.read_enriched(prep / ENRICHED_FILE, config.date_format, config.weather_list)
    report = json.loads((prep / REPORT_FILE).read_text()) if (prep / REPORT_FILE).exists() else {}
    return PreparedDataset(rio.read_streets(prep / STREETS_FILE), rio.read_intersections(prep / INTERSECTIONS_FILE),
                           enriched, [], report)


def calendar_span(crashes) -> tuple[datetime, datetime]:
    """Whole calendar years covering every crash timestamp."""
    stamps = [c.timestamp for c in crashes]
    return datetime(min(stamps).year, 1, 1), datetime(max(stamps).year, 12, 31, 23)


def build_graph(ds: PreparedDataset, config: RunConfig, input_digests: dict | None = None) -> StvgGraph:
    if not ds.enriched:
        raise BuildError("prepared dataset has no enriched crashes to build from")
    start, end = calendar_span(ds.enriched)
    tree = build_time_tree(start, end)
    return assemble_graph(ds.streets, ds.intersections, ds.enriched, tree, config, input_digests)


def build_snapshot(prep_dir: str | Path, snapshot_path: str | Path, config: RunConfig) -> StvgGraph:
    prep = Path(prep_dir)
    ds = load_prepared(prep, config)
    digests = {
        name: file_digest(prep / name) for name in (ENRICHED_FILE, STREETS_FILE, INTERSECTIONS_FILE)
    }
    graph = build_graph(ds, config, digests)
    save_snapshot(graph, snapshot_path)
    return graph
