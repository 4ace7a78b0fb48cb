"""Road geometry preparation: street merging, intersections, lixels, neighborhoods.

All coordinates are planar meters. Geometries are plain tuples of ``(x, y)``
so that every prepared object is hashable, comparable and cheap to serialize;
shapely is used only for the spatial-index and intersection primitives.
"""

from __future__ import annotations

import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass

import numpy as np
import shapely

from ..errors import ArgumentError, RecordError

Coord = tuple[float, float]
Polyline = tuple[Coord, ...]

DEFAULT_LIXEL_LENGTH = 50.0
DEFAULT_RADIUS = 15.0
DEFAULT_DEDUP_EPSILON = 1.0
MIN_VERTEX_GAP = 1e-9


def normalize_name(name: str) -> str:
    return " ".join(name.split()).upper()


def polyline_length(coords: Sequence[Coord]) -> float:
    return math.fsum(math.dist(a, b) for a, b in zip(coords, coords[1:]))


def geometry_problem(coords: Sequence[Coord]) -> str | None:
    """Return why ``coords`` is not a usable polyline, or None if it is."""
    if len(coords) < 2:
        return "geometry needs at least 2 vertices"
    for a, b in zip(coords, coords[1:]):
        if math.dist(a, b) <= MIN_VERTEX_GAP:
            return f"coincident consecutive vertices at {a}"
    return None


@dataclass(frozen=True)
class RoadSegment:
    segment_id: str
    name: str
    geometry: Polyline

    def __post_init__(self):
        object.__setattr__(self, "geometry", tuple((float(x), float(y)) for x, y in self.geometry))
        problem = geometry_problem(self.geometry)
        if problem:
            raise RecordError([(self.segment_id, problem)])


@dataclass(frozen=True)
class Street:
    name: str
    parts: tuple[Polyline, ...]

    @property
    def total_length(self) -> float:
        return math.fsum(polyline_length(p) for p in self.parts)

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        xs = [x for p in self.parts for x, _ in p]
        ys = [y for p in self.parts for _, y in p]
        return min(xs), min(ys), max(xs), max(ys)


@dataclass(frozen=True)
class Intersection:
    int_id: int
    name: str
    location: Coord
    member_streets: tuple[str, ...]


@dataclass(frozen=True)
class Lixel:
    lixel_id: str
    street_name: str
    geometry: Polyline
    length: float


@dataclass(frozen=True)
class Neighborhood:
    label: str | int
    kind: str  # "street" or "intersection"
    center: Polyline  # one vertex for intersections
    radius: float


def merge_segments(segments: Iterable[RoadSegment]) -> list[Street]:
    """Group segments into one Street per normalized name.

    Parts are ordered by their vertex sequence so the result does not depend
    on input order; streets come back sorted by name.
    """
    segments = list(segments)
    if not segments:
        raise ArgumentError("merge_segments needs at least one segment")
    unnamed = [(s.segment_id, "empty street name") for s in segments if not normalize_name(s.name)]
    if unnamed:
        raise RecordError(unnamed)
    groups: dict[str, list[Polyline]] = defaultdict(list)
    for seg in segments:
        groups[normalize_name(seg.name)].append(seg.geometry)
    return [Street(name, tuple(sorted(parts))) for name, parts in sorted(groups.items())]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, i: int) -> int:
        root = i
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[i] != root:
            self.parent[i], i = root, self.parent[i]
        return root

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        # keep the smaller index as root so group order stays stable
        if rb < ra:
            ra, rb = rb, ra
        self.parent[rb] = ra
        return True


def _close_pairs(xy: np.ndarray, eps: float) -> list[tuple[int, int]]:
    if len(xy) < 2:
        return []
    pts = shapely.points(xy)
    tree = shapely.STRtree(pts)
    src, dst = tree.query(pts, predicate="dwithin", distance=eps)
    keep = src < dst
    src, dst = src[keep], dst[keep]
    d = np.hypot(*(xy[src] - xy[dst]).T)
    close = d < eps
    return sorted(zip(src[close].tolist(), dst[close].tolist()))


def _cluster_points(xy: np.ndarray, eps: float) -> list[list[int]]:
    """Single-linkage clusters of points closer than ``eps``.

    Clusters are re-merged on their centroids until no two centroids are
    within ``eps`` of each other.
    """
    groups = [[i] for i in range(len(xy))]
    while True:
        centroids = np.array([xy[g].mean(axis=0) for g in groups]) if groups else np.empty((0, 2))
        pairs = _close_pairs(centroids, eps)
        if not pairs:
            return groups
        uf = _UnionFind(len(groups))
        for a, b in pairs:
            uf.union(a, b)
        merged: dict[int, list[int]] = {}
        for gi, g in enumerate(groups):
            merged.setdefault(uf.find(gi), []).extend(g)
        groups = [sorted(g) for _, g in sorted(merged.items())]


def _explode(streets: Sequence[Street]):
    """Flatten street parts into 2-point segments, in street/part/vertex order."""
    owners, coords = [], []
    for si, street in enumerate(streets):
        for part in street.parts:
            for a, b in zip(part, part[1:]):
                owners.append(si)
                coords.append((a, b))
    return np.asarray(owners, dtype=np.int64), np.asarray(coords, dtype=float).reshape(-1, 2, 2)


def _crossing_points(geom) -> list[Coord]:
    kind = shapely.get_type_id(geom)
    if kind == 0:  # Point
        return [tuple(shapely.get_coordinates(geom)[0])]
    if kind == 1:  # LineString: collinear overlap, report its ends
        c = shapely.get_coordinates(geom)
        return [tuple(c[0]), tuple(c[-1])]
    pts: list[Coord] = []
    for part in shapely.get_parts(geom):
        pts.extend(_crossing_points(part))
    return pts


def extract_intersections(
    streets: Iterable[Street], epsilon: float = DEFAULT_DEDUP_EPSILON
) -> list[Intersection]:
    """Find every point where parts of two or more distinct streets cross or touch."""
    streets = sorted(streets, key=lambda s: s.name)
    if len(streets) < 2:
        raise ArgumentError("extract_intersections needs at least 2 streets")
    owners, segs = _explode(streets)
    lines = shapely.linestrings(segs)
    tree = shapely.STRtree(lines)
    left, right = tree.query(lines, predicate="intersects")
    keep = (left < right) & (owners[left] != owners[right])
    left, right = left[keep], right[keep]
    order = np.lexsort((right, left))
    left, right = left[order], right[order]

    raw_xy: list[Coord] = []
    raw_names: list[tuple[str, str]] = []
    hits = shapely.intersection(lines[left], lines[right])
    for a, b, geom in zip(left.tolist(), right.tolist(), hits):
        names = (streets[owners[a]].name, streets[owners[b]].name)
        for p in _crossing_points(geom):
            raw_xy.append((float(p[0]), float(p[1])))
            raw_names.append(names)
    if not raw_xy:
        return []

    xy = np.asarray(raw_xy)
    found = []
    for group in _cluster_points(xy, epsilon):
        members: list[str] = []
        for i in group:
            for name in raw_names[i]:
                if name not in members:
                    members.append(name)
        cx, cy = xy[group].mean(axis=0)
        found.append(((float(cy), float(cx)), tuple(members)))
    found.sort(key=lambda item: item[0])
    return [
        Intersection(int_id=i, name="&".join(members), location=(x, y), member_streets=members)
        for i, ((y, x), members) in enumerate(found, start=1)
    ]


def _cut_polyline(coords: Polyline, step: float) -> list[Polyline]:
    """Cut a polyline into consecutive pieces of arc length ``step``; last piece is the remainder."""
    total = polyline_length(coords)
    n_full = math.floor(total / step)
    if total - n_full * step <= MIN_VERTEX_GAP:
        cuts = [k * step for k in range(1, n_full)]
    else:
        cuts = [k * step for k in range(1, n_full + 1)]

    pieces: list[Polyline] = []
    current: list[Coord] = [coords[0]]
    travelled = 0.0
    ci = 0
    for a, b in zip(coords, coords[1:]):
        seg_len = math.dist(a, b)
        while ci < len(cuts) and cuts[ci] < travelled + seg_len:
            t = (cuts[ci] - travelled) / seg_len
            cut = (a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))
            if math.dist(current[-1], cut) > MIN_VERTEX_GAP:
                current.append(cut)
            pieces.append(tuple(current))
            current = [cut]
            ci += 1
        if math.dist(current[-1], b) > MIN_VERTEX_GAP:
            current.append(b)
        travelled += seg_len
    if len(current) >= 2:
        pieces.append(tuple(current))
    return pieces


def lixelize(street: Street, lixel_length: float = DEFAULT_LIXEL_LENGTH) -> list[Lixel]:
    if lixel_length <= 0:
        raise ArgumentError(f"lixel_length must be positive, got {lixel_length}")
    out = []
    for pi, part in enumerate(street.parts):
        for k, piece in enumerate(_cut_polyline(part, lixel_length)):
            out.append(Lixel(f"{street.name}#{pi}#{k}", street.name, piece, polyline_length(piece)))
    return out


def build_neighborhoods(
    lixels: Iterable[Lixel],
    intersections: Iterable[Intersection],
    radius: float = DEFAULT_RADIUS,
) -> list[Neighborhood]:
    if radius <= 0:
        raise ArgumentError(f"radius must be positive, got {radius}")
    hoods = [Neighborhood(lx.street_name, "street", lx.geometry, radius) for lx in lixels]
    hoods += [Neighborhood(it.int_id, "intersection", (it.location,), radius) for it in intersections]
    return hoods
