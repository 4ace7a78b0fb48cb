"""The space-time-varying graph: node/edge records, adjacency and assembly.

Node ids are dense and laid out in blocks: time tree, factors, streets,
intersections, crashes (in sequence order). Edge ids follow the same
deterministic construction order, which is what makes snapshots of equal
inputs byte-identical.
"""

from __future__ import annotations

import math
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np

from ..errors import ArgumentError, BuildError
from ..roadprep.crashes import EnrichedCrash
from ..roadprep.network import Intersection, Street
from .timetree import LEVELS, TimeTree

CRASH, STREET, INTERSECTION, FACTOR, TIME = "Crash", "Street", "Intersection", "Factor", "TimeInstant"
NODE_LABELS = (TIME, FACTOR, STREET, INTERSECTION, CRASH)

LOCATED_AT = "LOCATED_AT"
NEXT_EVENT = "NEXT_EVENT"
NEXT_GEO = "NEXT_GEO"
HAPPENS_AT = "HAPPENS_AT"
CAUSED_BY = "CAUSED_BY"
CONTAINS = "CONTAINS"
NEXT_TIME = "NEXT_TIME"
CONNECTS = "CONNECTS"
EDGE_KINDS = (LOCATED_AT, NEXT_EVENT, NEXT_GEO, HAPPENS_AT, CAUSED_BY, CONTAINS, NEXT_TIME, CONNECTS)
KIND_CODE = {k: i for i, k in enumerate(EDGE_KINDS)}

# crash properties copied onto Crash nodes, in this order
CRASH_PROPERTIES = (
    "crash_id", "crash_date", "crash_time", "age", "hour_of_day", "day_of_week",
    "month_of_year", "year", "week_number", "fatalities", "injuries",
    "alcohol_related", "distraction_related", "weather_condition", "x", "y",
    "spatial_label", "label_kind", "sequence", "snap_distance",
)


@dataclass(frozen=True)
class NodeRecord:
    node_id: int
    label: str
    properties: dict[str, Any]


@dataclass(frozen=True)
class EdgeRecord:
    edge_id: int
    kind: str
    source: int
    target: int
    w_s: float | None = None
    w_t: float | None = None
    t_a: int | None = None
    t_b: int | None = None


def _csr(keys: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(keys, kind="stable")  # stable keeps edge-id order per node
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(keys, minlength=n), out=ptr[1:])
    return ptr, order.astype(np.int64)


@dataclass(frozen=True, eq=False)
class StvgGraph:
    nodes: tuple[NodeRecord, ...]
    edges: tuple[EdgeRecord, ...]
    time_tree: TimeTree
    metadata: dict[str, Any] = field(default_factory=dict)
    cache: dict = field(default_factory=dict, repr=False)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, StvgGraph)
            and self.nodes == other.nodes
            and self.edges == other.edges
            and self.metadata == other.metadata
        )

    __hash__ = None  # type: ignore[assignment]

    # edge columns as arrays, for the vectorized layers above
    @cached_property
    def edge_source(self) -> np.ndarray:
        return np.fromiter((e.source for e in self.edges), dtype=np.int64, count=len(self.edges))

    @cached_property
    def edge_target(self) -> np.ndarray:
        return np.fromiter((e.target for e in self.edges), dtype=np.int64, count=len(self.edges))

    @cached_property
    def edge_kind(self) -> np.ndarray:
        return np.fromiter((KIND_CODE[e.kind] for e in self.edges), dtype=np.int8, count=len(self.edges))

    @cached_property
    def _out(self):
        return _csr(self.edge_source, len(self.nodes))

    @cached_property
    def _in(self):
        return _csr(self.edge_target, len(self.nodes))

    def out_edges(self, node: int) -> np.ndarray:
        ptr, idx = self._out
        return idx[ptr[node] : ptr[node + 1]]

    def in_edges(self, node: int) -> np.ndarray:
        ptr, idx = self._in
        return idx[ptr[node] : ptr[node + 1]]

    @cached_property
    def label_array(self) -> np.ndarray:
        return np.array([NODE_LABELS.index(n.label) for n in self.nodes], dtype=np.int8)

    def ids_with_label(self, label: str) -> np.ndarray:
        return np.flatnonzero(self.label_array == NODE_LABELS.index(label))

    @cached_property
    def street_ids(self) -> dict[str, int]:
        return {n.properties["name"]: n.node_id for n in self.nodes if n.label == STREET}

    @cached_property
    def intersection_ids(self) -> dict[int, int]:
        return {n.properties["int_id"]: n.node_id for n in self.nodes if n.label == INTERSECTION}

    @cached_property
    def crash_ids(self) -> dict[str, int]:
        return {n.properties["crash_id"]: n.node_id for n in self.nodes if n.label == CRASH}

    def spatial_node(self, label: str | int, kind: str | None = None) -> int | None:
        """Resolve a street name or intersection id to its node id."""
        if kind in (None, "intersection"):
            try:
                hit = self.intersection_ids.get(int(label))
            except (TypeError, ValueError):
                hit = None
            if hit is not None:
                return hit
        if kind in (None, "street"):
            return self.street_ids.get(str(label))
        return None

    def node_label_text(self, node: int) -> str:
        """Human label: street name, intersection id, crash id, or factor/time value."""
        rec = self.nodes[node]
        props = rec.properties
        if rec.label == STREET:
            return props["name"]
        if rec.label == INTERSECTION:
            return str(props["int_id"])
        if rec.label == CRASH:
            return props["crash_id"]
        if rec.label == FACTOR:
            return f"{props['factor']}={props['value']}"
        return "-".join(str(v) for v in self.time_tree.keys[node]) or "Root"

    def counts(self) -> dict[str, dict[str, int]]:
        labels = Counter(n.label for n in self.nodes)
        kinds = Counter(e.kind for e in self.edges)
        return {
            "nodes": {k: labels.get(k, 0) for k in NODE_LABELS},
            "edges": {k: kinds.get(k, 0) for k in EDGE_KINDS},
            "total_nodes": len(self.nodes),
            "total_edges": len(self.edges),
        }


def neighbors(
    graph: StvgGraph,
    node_id: int,
    kinds: Iterable[str] | None = None,
    direction: str = "both",
) -> list[tuple[EdgeRecord, int]]:
    """Edges at ``node_id`` restricted to ``kinds`` and ``direction``, ordered by edge id."""
    if not 0 <= node_id < len(graph.nodes):
        raise ArgumentError(f"unknown node id {node_id}")
    if direction not in ("in", "out", "both"):
        raise ArgumentError(f"direction must be in/out/both, got {direction!r}")
    wanted = None if kinds is None else set(kinds)
    edge_ids: list[int] = []
    if direction in ("out", "both"):
        edge_ids += graph.out_edges(node_id).tolist()
    if direction in ("in", "both"):
        edge_ids += graph.in_edges(node_id).tolist()
    out = []
    for eid in sorted(set(edge_ids)):
        e = graph.edges[eid]
        if wanted is None or e.kind in wanted:
            out.append((e, e.target if e.source == node_id else e.source))
    return out


def _time_node_props(key: tuple[int, ...]) -> dict[str, Any]:
    props: dict[str, Any] = {"level": LEVELS[len(key)]}
    props.update(zip(("year", "month", "day", "hour"), key))
    return props


def factor_vocabulary(weather_values: Sequence[str]) -> list[tuple[str, str]]:
    return [("Alcohol", "Yes"), ("Distraction", "Yes")] + [("Weather", w) for w in weather_values]


def assemble_graph(
    streets: Sequence[Street],
    intersections: Sequence[Intersection],
    enriched_crashes: Sequence[EnrichedCrash],
    time_tree: TimeTree,
    config=None,
    input_digests: Mapping[str, str] | None = None,
) -> StvgGraph:
    """Assemble both spaces, the factor nodes and the time tree into one graph."""
    weather_values = config.weather_list if config is not None else ("Clear", "Cloudy", "Rain")
    streets = sorted(streets, key=lambda s: s.name)
    intersections = sorted(intersections, key=lambda i: i.int_id)
    crashes = sorted(enriched_crashes, key=lambda c: c.sequence)

    seqs = [c.sequence for c in crashes]
    if seqs != list(range(1, len(crashes) + 1)):
        raise BuildError("crash sequence numbers are not a permutation of 1..N")

    nodes: list[NodeRecord] = [NodeRecord(i, TIME, _time_node_props(k)) for i, k in enumerate(time_tree.keys)]

    factor_id: dict[tuple[str, str], int] = {}
    for factor, value in factor_vocabulary(weather_values):
        factor_id[(factor, value)] = len(nodes)
        nodes.append(NodeRecord(len(nodes), FACTOR, {"factor": factor, "value": value}))

    street_id: dict[str, int] = {}
    for s in streets:
        street_id[s.name] = len(nodes)
        nodes.append(
            NodeRecord(
                len(nodes),
                STREET,
                {"name": s.name, "total_length": s.total_length, "parts": len(s.parts), "bbox": list(s.bounds)},
            )
        )
    int_node: dict[int, int] = {}
    for it in intersections:
        int_node[it.int_id] = len(nodes)
        nodes.append(
            NodeRecord(
                len(nodes),
                INTERSECTION,
                {
                    "int_id": it.int_id,
                    "name": it.name,
                    "x": it.location[0],
                    "y": it.location[1],
                    "members": list(it.member_streets),
                },
            )
        )

    unresolved, outside, crash_place, crash_hour = [], [], [], []
    for c in crashes:
        if c.label_kind == "intersection":
            try:
                place = int_node.get(int(c.spatial_label))
            except ValueError:
                place = None
        elif c.label_kind == "street":
            place = street_id.get(c.spatial_label)
        else:
            place = None
        if place is None:
            unresolved.append(c.crash_id)
        hour = time_tree.hour_of(c.timestamp) if c.timestamp is not None else None
        if hour is None:
            outside.append(c.crash_id)
        crash_place.append(place)
        crash_hour.append(hour)
    if unresolved:
        raise BuildError("crash spatial labels do not resolve to a street or intersection", unresolved)
    if outside:
        raise BuildError("crash timestamps fall outside the time tree span", outside)

    crash_node: list[int] = []
    for c in crashes:
        props = {k: getattr(c, k) for k in CRASH_PROPERTIES}
        props["timestamp"] = c.timestamp.isoformat()
        crash_node.append(len(nodes))
        nodes.append(NodeRecord(len(nodes), CRASH, props))

    edges: list[EdgeRecord] = []

    def add(kind, u, v, **weights):
        edges.append(EdgeRecord(len(edges), kind, u, v, **weights))

    for p, child in time_tree.contains_edges:
        add(CONTAINS, p, child)
    for a, b in time_tree.next_edges:
        add(NEXT_TIME, a, b)
    for it in intersections:
        for name in it.member_streets:
            if name not in street_id:
                raise BuildError(f"intersection {it.int_id} names unknown street {name!r}")
            add(CONNECTS, street_id[name], int_node[it.int_id], w_s=0.0)
    for c, node, place, hour in zip(crashes, crash_node, crash_place, crash_hour):
        add(LOCATED_AT, node, place)
        add(HAPPENS_AT, node, hour)
        if c.alcohol_related:
            add(CAUSED_BY, node, factor_id[("Alcohol", "Yes")])
        if c.distraction_related:
            add(CAUSED_BY, node, factor_id[("Distraction", "Yes")])
        add(CAUSED_BY, node, factor_id[("Weather", c.weather_condition)])
    for i in range(len(crashes) - 1):
        a, b = crashes[i], crashes[i + 1]
        add(
            NEXT_EVENT,
            crash_node[i],
            crash_node[i + 1],
            w_t=(b.timestamp - a.timestamp).total_seconds(),
            t_a=crash_hour[i],
            t_b=crash_hour[i + 1],
        )
    for i in range(len(crashes) - 1):
        if crash_place[i] == crash_place[i + 1]:
            continue
        a, b = crashes[i], crashes[i + 1]
        add(
            NEXT_GEO,
            crash_place[i],
            crash_place[i + 1],
            w_s=math.dist((a.x, a.y), (b.x, b.y)),
            w_t=(b.timestamp - a.timestamp).total_seconds(),
            t_a=crash_hour[i],
            t_b=crash_hour[i + 1],
        )

    graph = StvgGraph(tuple(nodes), tuple(edges), time_tree)
    metadata: dict[str, Any] = {
        "config": config.as_dict() if config is not None else {},
        "config_digest": config.digest if config is not None else "",
        "input_digests": dict(sorted((input_digests or {}).items())),
        "counts": graph.counts(),
    }
    graph.metadata.update(metadata)
    return graph
