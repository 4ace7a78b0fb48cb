"""Versioned on-disk snapshot of an assembled graph.

Layout (UTF-8 text, ``\\n`` line ends)::

    STVG-SNAPSHOT 1
    {"config_digest": ..., "edge_count": M, "metadata": {...}, "node_count": N}
    N node lines   [node_id, label, properties]
    M edge lines   [edge_id, kind, source, target, w_s, w_t, t_a, t_b]
    CRC32 <8 hex digits over every preceding byte>

JSON is written with sorted keys and no optional whitespace, so equal graphs
produce identical bytes.
"""

from __future__ import annotations

import json
import os
import zlib
from pathlib import Path

from ..errors import SnapshotChecksumError, SnapshotError, SnapshotTruncatedError, SnapshotVersionError
from .graph import TIME, EdgeRecord, NodeRecord, StvgGraph
from .timetree import TimeTree

MAGIC = "STVG-SNAPSHOT"
VERSION = 1
_KEY_FIELDS = ("year", "month", "day", "hour")


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False, allow_nan=False)


def snapshot_bytes(graph: StvgGraph) -> bytes:
    lines = [
        f"{MAGIC} {VERSION}",
        _dumps(
            {
                "config_digest": graph.metadata.get("config_digest", ""),
                "edge_count": len(graph.edges),
                "metadata": graph.metadata,
                "node_count": len(graph.nodes),
            }
        ),
    ]
    lines += [_dumps([n.node_id, n.label, n.properties]) for n in graph.nodes]
    lines += [_dumps([e.edge_id, e.kind, e.source, e.target, e.w_s, e.w_t, e.t_a, e.t_b]) for e in graph.edges]
    body = ("\n".join(lines) + "\n").encode("utf-8")
    return body + f"CRC32 {zlib.crc32(body):08x}\n".encode("ascii")


def save_snapshot(graph: StvgGraph, path: str | Path) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(snapshot_bytes(graph))
    os.replace(tmp, path)


def load_snapshot(path: str | Path) -> StvgGraph:
    path = Path(path)
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        raise SnapshotError(f"{path}: no such snapshot") from None

    first, _, _ = data.partition(b"\n")
    magic, _, version = first.decode("utf-8", "replace").partition(" ")
    if magic != MAGIC:
        raise SnapshotError(f"{path}: not a graph snapshot")
    if version != str(VERSION):
        raise SnapshotVersionError(f"{path}: snapshot version {version!r}, this engine reads {VERSION}")

    if not data.endswith(b"\n"):
        raise SnapshotTruncatedError(f"{path}: snapshot is truncated")
    cut = data.rfind(b"\n", 0, len(data) - 1) + 1
    trailer = data[cut:].decode("ascii", "replace").strip()
    if not trailer.startswith("CRC32 ") or len(trailer) != 14:
        raise SnapshotTruncatedError(f"{path}: snapshot is truncated (no checksum trailer)")
    body = data[:cut]
    if f"{zlib.crc32(body):08x}" != trailer[6:]:
        raise SnapshotChecksumError(f"{path}: checksum mismatch, file is corrupted")

    lines = body.decode("utf-8").split("\n")[:-1]
    try:
        header = json.loads(lines[1])
        n_nodes, n_edges = header["node_count"], header["edge_count"]
        if len(lines) != 2 + n_nodes + n_edges:
            raise SnapshotTruncatedError(f"{path}: expected {n_nodes} nodes and {n_edges} edges")
        nodes = []
        for line in lines[2 : 2 + n_nodes]:
            node_id, label, props = json.loads(line)
            nodes.append(NodeRecord(node_id, label, props))
        edges = [EdgeRecord(*json.loads(line)) for line in lines[2 + n_nodes :]]
    except (ValueError, KeyError, IndexError, TypeError) as exc:
        raise SnapshotError(f"{path}: malformed snapshot ({exc})") from exc

    keys = [tuple(n.properties[k] for k in _KEY_FIELDS if k in n.properties) for n in nodes if n.label == TIME]
    tree = TimeTree.from_keys(keys) if keys else TimeTree.from_keys([()])
    return StvgGraph(tuple(nodes), tuple(edges), tree, header["metadata"])
