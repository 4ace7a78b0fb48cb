"""Degree and PageRank centrality over subgraph footprints, rankings and profiles."""

from __future__ import annotations

import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np

from .core.graph import LOCATED_AT, StvgGraph
from .errors import ArgumentError
from .roadprep.network import normalize_name
from .projection import Bands, CrashFilter, SubgraphFootprint, TimeWindow, _class_label, project, sweep

log = logging.getLogger(__name__)

CONVENTIONS = ("paper", "standard")
DANGLING_POLICIES = ("sink", "redistribute")


@dataclass(frozen=True)
class PageRankConfig:
    """PageRank parameters.

    With ``convention="paper"`` the update is ``d/n + (1 - d) * inflow``, so
    ``d`` is the teleport weight (0.15 here equals the usual 0.85 damping).
    ``convention="standard"`` uses ``(1 - d)/n + d * inflow``.
    """

    d: float = 0.15
    max_iterations: int = 100
    tolerance: float = 1e-12
    dangling_policy: str = "redistribute"
    convention: str = "paper"

    def __post_init__(self):
        if not 0 < self.d < 1:
            raise ArgumentError(f"damping factor must be in (0, 1), got {self.d}")
        if not self.tolerance > 0:
            raise ArgumentError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise ArgumentError("max_iterations must be >= 1")
        if self.dangling_policy not in DANGLING_POLICIES:
            raise ArgumentError(f"dangling_policy must be one of {DANGLING_POLICIES}")
        if self.convention not in CONVENTIONS:
            raise ArgumentError(f"convention must be one of {CONVENTIONS}")

    @property
    def teleport_and_follow(self) -> tuple[float, float]:
        if self.convention == "paper":
            return self.d, 1.0 - self.d
        return 1.0 - self.d, self.d


@dataclass
class PowerIteration:
    scores: np.ndarray
    converged: bool
    iterations: int
    deltas: list[float]

    @property
    def monotone(self) -> bool:
        """L1 deltas never grow after the second iteration (diagnostic only)."""
        tail = self.deltas[1:]
        return all(b <= a for a, b in zip(tail, tail[1:]))


def power_iteration(n: int, src: np.ndarray, dst: np.ndarray, config: PageRankConfig) -> PowerIteration:
    """PageRank on nodes ``0..n-1`` with directed edges ``src[i] -> dst[i]``.

    Parallel edges count with multiplicity. Inflow sums run in ascending
    source order per target so results are bit-stable.
    """
    if n <= 0:
        raise ArgumentError("PageRank needs at least one node")
    src = np.asarray(src, dtype=np.int64)
    dst = np.asarray(dst, dtype=np.int64)
    order = np.lexsort((src, dst))
    src, dst = src[order], dst[order]
    out_degree = np.bincount(src, minlength=n).astype(float)
    dangling = np.flatnonzero(out_degree == 0)
    share = np.divide(1.0, out_degree, out=np.zeros(n), where=out_degree > 0)
    teleport, follow = config.teleport_and_follow
    redistribute = config.dangling_policy == "redistribute"

    pr = np.full(n, 1.0 / n)
    deltas: list[float] = []
    converged = False
    for _ in range(config.max_iterations):
        inflow = np.bincount(dst, weights=pr[src] * share[src], minlength=n)
        new = teleport / n + follow * inflow
        if redistribute and len(dangling):
            new += follow * pr[dangling].sum() / n
        delta = float(np.abs(new - pr).sum())
        deltas.append(delta)
        pr = new
        if delta < config.tolerance:
            converged = True
            break
    result = PowerIteration(pr, converged, len(deltas), deltas)
    if not converged:
        log.warning("PageRank did not converge in %d iterations (last L1 delta %.3g)", len(deltas), deltas[-1])
    if not result.monotone:
        log.warning("PageRank L1 deltas were not monotone after iteration 2")
    return result


@dataclass(frozen=True)
class CentralityScores:
    metric: str
    target_class: str
    scores: dict[int, float]  # node id -> score, for nodes of the class present in the footprint
    labels: dict[int, str]
    names: dict[int, str]
    window: TimeWindow | None = None
    filter: CrashFilter | None = None
    config: PageRankConfig | None = None
    converged: bool = True
    iterations: int = 0
    deltas: tuple[float, ...] = ()
    monotone: bool = True

    def get(self, node: int) -> float:
        """Score of ``node``; nodes absent from the footprint score 0."""
        return self.scores.get(node, 0)

    def by_label(self) -> dict[str, float]:
        return {self.labels[n]: s for n, s in self.scores.items()}


def _describe(graph: StvgGraph, nodes: Iterable[int]) -> tuple[dict[int, str], dict[int, str]]:
    labels, names = {}, {}
    for n in nodes:
        labels[n] = graph.node_label_text(n)
        names[n] = graph.nodes[n].properties.get("name", labels[n])
    return labels, names


def degree_centrality(
    sf: SubgraphFootprint, target_class: str, kinds: Sequence[str] | None = None
) -> CentralityScores:
    """In- plus out-degree over the footprint's retained edges.

    ``kinds`` restricts which edge kinds are counted; by default every
    retained edge counts, CONNECTS included.
    """
    targets = sf.spatial_of_class(target_class)
    edges = sf.edge_ids if kinds is None else sf.edges_of_kind(*kinds)
    g = sf.graph
    n = len(g.nodes)
    counts = np.bincount(g.edge_source[edges], minlength=n) + np.bincount(g.edge_target[edges], minlength=n)
    scores = {int(t): int(counts[t]) for t in targets}
    labels, names = _describe(g, scores)
    return CentralityScores("degree", target_class, scores, labels, names, sf.window, sf.filter)


def pagerank(
    sf: SubgraphFootprint, config: PageRankConfig | None = None, target_class: str | None = None
) -> CentralityScores:
    """PageRank over all footprint nodes; scores reported for ``target_class`` (or every node)."""
    config = config or PageRankConfig()
    nodes = sf.node_ids
    if len(nodes) == 0:
        raise ArgumentError("PageRank needs a nonempty footprint")
    local = np.searchsorted(nodes, sf.edge_sources), np.searchsorted(nodes, sf.edge_targets)
    run = power_iteration(len(nodes), *local, config)
    if target_class is None:
        keep = nodes
        cls = "all"
    else:
        keep = sf.spatial_of_class(target_class)
        cls = target_class
    pos = np.searchsorted(nodes, keep)
    scores = {int(k): float(run.scores[p]) for k, p in zip(keep, pos)}
    labels, names = _describe(sf.graph, scores)
    return CentralityScores(
        "pagerank",
        cls,
        scores,
        labels,
        names,
        sf.window,
        sf.filter,
        config,
        run.converged,
        run.iterations,
        tuple(run.deltas),
        run.monotone,
    )


@dataclass(frozen=True)
class RankedRow:
    rank: int
    label: str
    score: float
    name: str
    node_id: int


@dataclass(frozen=True)
class RankedTable:
    rows: tuple[RankedRow, ...]
    k: int
    metric: str
    target_class: str
    window: TimeWindow | None = None
    filter: CrashFilter | None = None
    extra: dict = field(default_factory=dict)


def top_k(scores: CentralityScores, k: int = 20) -> RankedTable:
    """The ``k`` best-scoring nodes, score descending, ties by label ascending."""
    if k < 1:
        raise ArgumentError(f"k must be >= 1, got {k}")
    ordered = sorted(scores.scores.items(), key=lambda item: (-item[1], scores.labels[item[0]]))[:k]
    rows = tuple(
        RankedRow(rank, scores.labels[node], score, scores.names[node], node)
        for rank, (node, score) in enumerate(ordered, start=1)
    )
    return RankedTable(rows, k, scores.metric, scores.target_class, scores.window, scores.filter)


def resolve_targets(graph: StvgGraph, targets: Iterable[str | int]) -> dict[str, int]:
    """Map target labels (street names or intersection ids) to node ids."""
    found, unknown = {}, []
    for t in targets:
        text = str(t).strip()
        node = graph.spatial_node(text, "intersection") if text.isdigit() else None
        if node is None:
            node = graph.spatial_node(normalize_name(text), "street")
        if node is None:
            unknown.append(text)
        else:
            found[text] = node
    if unknown:
        raise ArgumentError("unknown target(s): " + ", ".join(unknown))
    return found


def _crash_incidence(sf: SubgraphFootprint) -> np.ndarray:
    g = sf.graph
    loc = sf.edges_of_kind(LOCATED_AT)
    return np.bincount(g.edge_target[loc], minlength=len(g.nodes))


def temporal_profile(
    graph: StvgGraph,
    granularity: str,
    targets: Iterable[str | int],
    flt: CrashFilter | None = None,
    bands: Bands | None = None,
) -> dict[str, list[tuple[object, int]]]:
    """Per-bucket crash-incidence degree (LOCATED_AT edges) of each target.

    CONNECTS edges are left out: they do not vary with time and would add
    the same constant to every bucket.
    """
    resolved = resolve_targets(graph, targets)
    series: dict[str, list[tuple[object, int]]] = {t: [] for t in resolved}
    for bucket, sf in sweep(graph, granularity, flt, bands):
        counts = _crash_incidence(sf)
        for t, node in resolved.items():
            series[t].append((bucket, int(counts[node])))
    return series


@dataclass(frozen=True)
class FatalityRow:
    label: str
    name: str
    node_id: int
    overall: int
    fatal: int


def fatality_profile(
    graph: StvgGraph,
    window: TimeWindow | None,
    target_class: str,
    bands: Bands | None = None,
) -> list[FatalityRow]:
    """Overall vs fatal-crash incidence degree per street or intersection in ``window``."""
    label = _class_label(target_class)
    overall_sf = project(graph, window, CrashFilter(), bands)
    fatal_sf = project(graph, window, CrashFilter(fatal=True), bands)
    overall, fatal = _crash_incidence(overall_sf), _crash_incidence(fatal_sf)
    rows = []
    for node in np.flatnonzero(overall > 0):
        rec = graph.nodes[node]
        if rec.label != label:
            continue
        text = graph.node_label_text(int(node))
        rows.append(
            FatalityRow(text, rec.properties.get("name", text), int(node), int(overall[node]), int(fatal[node]))
        )
    rows.sort(key=lambda r: (-r.overall, -r.fatal, r.label))
    return rows


__all__ = [
    "CentralityScores",
    "FatalityRow",
    "PageRankConfig",
    "PowerIteration",
    "RankedRow",
    "RankedTable",
    "degree_centrality",
    "fatality_profile",
    "pagerank",
    "power_iteration",
    "resolve_targets",
    "temporal_profile",
    "top_k",
]
