"""Road-network and crash preprocessing: geometry to geo-enriched, sequenced crash records."""

from .crashes import EnrichedCrash, RawCrash, geo_enrich, sequence_crashes
from .network import (
    Intersection,
    Lixel,
    Neighborhood,
    RoadSegment,
    Street,
    build_neighborhoods,
    extract_intersections,
    lixelize,
    merge_segments,
    normalize_name,
    polyline_length,
)

__all__ = [
    "EnrichedCrash",
    "Intersection",
    "Lixel",
    "Neighborhood",
    "RawCrash",
    "RoadSegment",
    "Street",
    "build_neighborhoods",
    "extract_intersections",
    "geo_enrich",
    "lixelize",
    "merge_segments",
    "normalize_name",
    "polyline_length",
    "sequence_crashes",
]
