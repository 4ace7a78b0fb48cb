"""Graph core: time tree, property graph assembly, adjacency queries and snapshots."""

from .graph import (
    CAUSED_BY,
    CONNECTS,
    CONTAINS,
    CRASH,
    EDGE_KINDS,
    FACTOR,
    HAPPENS_AT,
    INTERSECTION,
    LOCATED_AT,
    NEXT_EVENT,
    NEXT_GEO,
    NEXT_TIME,
    STREET,
    TIME,
    EdgeRecord,
    NodeRecord,
    StvgGraph,
    assemble_graph,
    neighbors,
)
from .snapshot import load_snapshot, save_snapshot, snapshot_bytes
from .timetree import TimeTree, build_time_tree

__all__ = [
    "CAUSED_BY",
    "CONNECTS",
    "CONTAINS",
    "CRASH",
    "EDGE_KINDS",
    "FACTOR",
    "HAPPENS_AT",
    "INTERSECTION",
    "LOCATED_AT",
    "NEXT_EVENT",
    "NEXT_GEO",
    "NEXT_TIME",
    "STREET",
    "TIME",
    "EdgeRecord",
    "NodeRecord",
    "StvgGraph",
    "TimeTree",
    "assemble_graph",
    "build_time_tree",
    "load_snapshot",
    "neighbors",
    "save_snapshot",
    "snapshot_bytes",
]
