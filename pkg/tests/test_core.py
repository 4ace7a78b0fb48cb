from __future__ import annotations

import calendar
import csv
import random
from collections import Counter
from datetime import date, datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_crash, synthetic_graph
from stvg.core import (
    StvgGraph,
    assemble_graph,
    build_time_tree,
    load_snapshot,
    neighbors,
    save_snapshot,
)
from stvg.core.graph import (
    CAUSED_BY,
    CONNECTS,
    CONTAINS,
    CRASH,
    FACTOR,
    HAPPENS_AT,
    INTERSECTION,
    LOCATED_AT,
    NEXT_EVENT,
    NEXT_GEO,
    NEXT_TIME,
    STREET,
    TIME,
)
from stvg.core.snapshot import snapshot_bytes
from stvg.core.timetree import TimeTree
from stvg.errors import (
    ArgumentError,
    BuildError,
    SnapshotChecksumError,
    SnapshotError,
    SnapshotTruncatedError,
    SnapshotVersionError,
)
from stvg.roadprep import Intersection, Lixel, Street, build_neighborhoods, geo_enrich, sequence_crashes
from stvg.synth import SyntheticSpec, write_synthetic

# --- time tree ------------------------------------------------------------------


def calendar_counts(first: date, last: date) -> tuple[int, int, int, int]:
    """Year/Month/Day/Hour counts by walking the calendar one day at a time."""
    years, months, days = set(), set(), 0
    d = first
    while d <= last:
        years.add(d.year)
        months.add((d.year, d.month))
        days += 1
        d += timedelta(days=1)
    return len(years), len(months), days, days * 24


def level_counts(tree: TimeTree) -> tuple[int, ...]:
    return tuple(len(tree.nodes_at(level)) for level in ("Year", "Month", "Day", "Hour"))


def test_six_year_tree_cardinality():
    tree = build_time_tree(date(2010, 1, 1), date(2015, 12, 31))
    assert level_counts(tree) == calendar_counts(date(2010, 1, 1), date(2015, 12, 31)) == (6, 72, 2191, 52584)


def test_one_hour_tree():
    tree = build_time_tree(datetime(2014, 6, 1, 13, 5), datetime(2014, 6, 1, 13, 59))
    assert level_counts(tree) == (1, 1, 1, 1)
    assert tree.span == (datetime(2014, 6, 1, 13), datetime(2014, 6, 1, 13))


def test_single_year_hours():
    assert len(build_time_tree(date(2014, 1, 1), date(2014, 12, 31)).nodes_at("Hour")) == 8760
    assert len(build_time_tree(date(2012, 1, 1), date(2012, 12, 31)).nodes_at("Hour")) == 8784


def test_reversed_span_rejected():
    with pytest.raises(ArgumentError):
        build_time_tree(datetime(2014, 1, 2), datetime(2014, 1, 1))


@settings(max_examples=40, deadline=None)
@given(st.datetimes(datetime(2011, 1, 1), datetime(2013, 12, 31)), st.integers(0, 24 * 70))
def test_tree_structure_is_calendar_correct(start, hours):
    end = start + timedelta(hours=hours)
    tree = build_time_tree(start, end)
    leaves = tree.nodes_at("Hour")
    first, last = start.replace(minute=0, second=0, microsecond=0), end.replace(minute=0, second=0, microsecond=0)
    assert len(leaves) == (last - first) // timedelta(hours=1) + 1
    # each non-root node has a parent exactly one level up, and its key extends the parent's
    for node in range(1, len(tree)):
        p = tree.parent[node]
        assert len(tree.keys[p]) == len(tree.keys[node]) - 1
        assert tree.keys[node][:-1] == tree.keys[p]
    # leaves are consecutive hours
    times = [tree.hour_time(h) for h in leaves]
    assert all(b - a == timedelta(hours=1) for a, b in zip(times, times[1:]))
    # days honor month lengths
    for d in tree.nodes_at("Day"):
        y, m, dd = tree.keys[d]
        assert 1 <= dd <= calendar.monthrange(y, m)[1]
    # sibling chains are total orders: each level's NEXT_TIME edges form a single path
    nxt = tree.next_edges
    for level in ("Year", "Month", "Day", "Hour"):
        ids = tree.nodes_at(level)
        chain = [(a, b) for a, b in nxt if tree.level(a) == level]
        assert chain == list(zip(ids, ids[1:]))
        assert all(tree.keys[a] < tree.keys[b] for a, b in chain)


def test_descend_finds_covering_leaves():
    tree = build_time_tree(datetime(2013, 12, 30, 22), datetime(2014, 1, 2, 3))
    leaves = tree.nodes_at("Hour")
    assert tree.descend(datetime(2014, 1, 1, 0, 30), "first") == tree.hour_of(datetime(2014, 1, 1))
    assert tree.descend(datetime(2000, 1, 1), "first") == leaves[0]
    assert tree.descend(datetime(2000, 1, 1), "last") is None
    assert tree.descend(datetime(2030, 1, 1), "last") == leaves[-1]
    assert tree.descend(datetime(2030, 1, 1), "first") is None


# --- assembly -------------------------------------------------------------------

T0 = datetime(2014, 3, 3, 8, 0)


def _prepared(specs):
    """Enriched crashes on a one-intersection cross; spec = (id, when, where, **flags)."""
    streets = [Street("A", (((0.0, 0.0), (200.0, 0.0)),)), Street("B", (((100.0, -100.0), (100.0, 100.0)),))]
    ints = [Intersection(1, "A&B", (100.0, 0.0), ("A", "B"))]
    lixel = Lixel("A#0#0", "A", ((0.0, 0.0), (200.0, 0.0)), 200.0)
    hoods = build_neighborhoods([lixel], ints)
    raws = [make_crash(cid, when, x, y, **kw) for cid, when, (x, y), kw in specs]
    enriched, orphans = geo_enrich(raws, hoods)
    assert not orphans
    return streets, ints, sequence_crashes(enriched)


def test_single_crash_edges():
    streets, ints, crashes = _prepared([("1", T0, (20.0, 3.0), {})])
    g = assemble_graph(streets, ints, crashes, build_time_tree(T0, T0))
    kinds = Counter(e.kind for e in g.edges if e.kind not in (CONTAINS, NEXT_TIME, CONNECTS))
    assert kinds == {LOCATED_AT: 1, HAPPENS_AT: 1, CAUSED_BY: 1}


def test_next_event_weight_is_elapsed_seconds():
    streets, ints, crashes = _prepared([("1", T0, (20.0, 3.0), {}), ("2", T0 + timedelta(hours=1), (100.0, 0.0), {})])
    tree = build_time_tree(T0, T0 + timedelta(hours=1))
    g = assemble_graph(streets, ints, crashes, tree)
    (nx,) = [e for e in g.edges if e.kind == NEXT_EVENT]
    assert nx.w_t == 3600
    assert (nx.t_a, nx.t_b) == (tree.hour_of(T0), tree.hour_of(T0 + timedelta(hours=1)))
    (geo,) = [e for e in g.edges if e.kind == NEXT_GEO]
    assert g.nodes[geo.source].label == STREET and g.nodes[geo.target].label == INTERSECTION
    assert geo.w_s == pytest.approx(((100 - 20) ** 2 + 3**2) ** 0.5)


def test_connects_edges_carry_zero_distance():
    streets, ints, crashes = _prepared([("1", T0, (20.0, 3.0), {})])
    g = assemble_graph(streets, ints, crashes, build_time_tree(T0, T0))
    conn = [e for e in g.edges if e.kind == CONNECTS]
    assert len(conn) == 2 and all(e.w_s == 0.0 for e in conn)
    assert {g.nodes[e.source].properties["name"] for e in conn} == {"A", "B"}


def test_unresolved_label_is_build_error():
    streets, ints, crashes = _prepared([("1", T0, (20.0, 3.0), {}), ("2", T0, (100.0, 0.0), {})])
    with pytest.raises(BuildError) as err:
        assemble_graph(streets[:1], [], crashes, build_time_tree(T0, T0))
    assert err.value.record_ids == ["2"]
    assert err.value.exit_code == 4


def test_timestamp_outside_tree_is_build_error():
    streets, ints, crashes = _prepared([("1", T0, (20.0, 3.0), {}), ("late", T0 + timedelta(days=2), (20.0, 3.0), {})])
    with pytest.raises(BuildError) as err:
        assemble_graph(streets, ints, crashes, build_time_tree(T0, T0 + timedelta(hours=5)))
    assert err.value.record_ids == ["late"]


def test_random_crashes_counting_oracle():
    rng = random.Random(9)
    specs = []
    for i in range(300):
        when = T0 + timedelta(minutes=rng.randrange(0, 60 * 24 * 10))
        where = rng.choice([(100.0, 0.0), (rng.uniform(0, 80), rng.uniform(-5, 5))])
        flags = {"alcohol_related": rng.random() < 0.3, "distraction_related": rng.random() < 0.2,
                 "weather_condition": rng.choice(["Clear", "Cloudy", "Rain"])}
        specs.append((str(i), when, where, flags))
    streets, ints, crashes = _prepared(specs)
    g = assemble_graph(streets, ints, crashes, build_time_tree(T0.date(), (T0 + timedelta(days=10)).date()))
    kinds = Counter(e.kind for e in g.edges)
    n = len(specs)
    assert kinds[NEXT_EVENT] == n - 1
    assert kinds[LOCATED_AT] == n == kinds[HAPPENS_AT]
    n_alc = sum(s[3]["alcohol_related"] for s in specs)
    n_dis = sum(s[3]["distraction_related"] for s in specs)
    assert kinds[CAUSED_BY] == n + n_alc + n_dis


def _place_of(row, spec: SyntheticSpec) -> tuple[str, str]:
    """Where a synthetic crash must land, from its coordinates alone."""
    ox, oy = spec.origin
    x, y = float(row["X"]) - ox, float(row["Y"]) - oy
    r, c = round(y / spec.spacing), round(x / spec.spacing)
    if abs(x - c * spec.spacing) < 1e-6 and abs(y - r * spec.spacing) < 1e-6:
        return "intersection", str(spec.intersection_id(r, c))
    if abs(y - r * spec.spacing) <= 15:
        return "street", f"H{r} ST"
    return "street", f"V{c} AVE"


def test_synthetic_grid_counts_match_closed_form(workdir):
    spec = SyntheticSpec(crashes=1000, seed=2)
    g = synthetic_graph(spec, workdir)
    roads, crashes_csv = write_synthetic(spec, workdir / "closed_form")
    with open(crashes_csv) as fh:
        rows = list(csv.DictReader(fh))
    def when(r):
        return datetime.strptime(f"{r['Crash_DT']} {r['Crash_TM']}", "%m/%d/%Y %H:%M")

    rows.sort(key=lambda r: (when(r), int(r["Crash_ID"])))
    places = [_place_of(r, spec) for r in rows]
    counts = g.counts()
    tree = g.time_tree
    n_time = 1 + 6 + 72 + 2191 + 52584
    assert counts["nodes"] == {TIME: n_time, FACTOR: 5, STREET: 10, INTERSECTION: 25, CRASH: 1000}
    assert counts["edges"][CONTAINS] == n_time - 1
    assert counts["edges"][NEXT_TIME] == 5 + 71 + 2190 + 52583
    assert counts["edges"][CONNECTS] == 50
    assert counts["edges"][LOCATED_AT] == counts["edges"][HAPPENS_AT] == 1000
    assert counts["edges"][NEXT_EVENT] == 999
    assert counts["edges"][NEXT_GEO] == sum(a != b for a, b in zip(places, places[1:]))
    yes = sum(r["Alcohol_Related"] == "Yes" for r in rows) + sum(r["Distraction_Related"] == "Yes" for r in rows)
    assert counts["edges"][CAUSED_BY] == 1000 + yes
    # the LOCATED_AT target of each crash is the place computed from its coordinates
    for node in g.ids_with_label(CRASH):
        (edge, place), = neighbors(g, int(node), {LOCATED_AT}, "out")
        props = g.nodes[node].properties
        row_place = _place_of({"X": props["x"], "Y": props["y"]}, spec)
        assert (g.nodes[place].label.lower(), g.node_label_text(place)) == row_place
    assert len(tree.nodes_at("Hour")) == 52584


def test_node_typing_and_crash_edge_invariants(small_graph):
    g = small_graph
    for n in g.nodes:
        if n.label in (STREET, INTERSECTION):
            assert "timestamp" not in n.properties
        if n.label == FACTOR:
            assert not {"timestamp", "x", "y"} & set(n.properties)
    for node in g.ids_with_label(CRASH)[:300]:
        out = Counter(e.kind for e, _ in neighbors(g, int(node), direction="out"))
        assert out[LOCATED_AT] == 1 and out[HAPPENS_AT] == 1
    for e in g.edges:
        if e.kind == NEXT_EVENT:
            assert e.w_t >= 0 and e.t_a is not None and e.t_b is not None
        elif e.kind in (LOCATED_AT, CAUSED_BY, HAPPENS_AT):
            assert (e.w_s, e.w_t) == (None, None)
        elif e.kind == CONNECTS:
            assert e.w_s >= 0


# --- neighbors ------------------------------------------------------------------


def test_neighbors_located_at(small_graph):
    g = small_graph
    crash = int(g.ids_with_label(CRASH)[0])
    assert len(neighbors(g, crash, {LOCATED_AT}, "out")) == 1
    street = g.street_ids["H2 ST"]
    k = sum(1 for e in g.edges if e.kind == LOCATED_AT and e.target == street)
    assert len(neighbors(g, street, {LOCATED_AT}, "in")) == k > 0


def test_neighbors_match_edge_list_scan(small_graph):
    g = small_graph
    rng = random.Random(1)
    kinds_pool = [None, {LOCATED_AT}, {NEXT_EVENT, NEXT_GEO}, {CONNECTS, CAUSED_BY}, {CONTAINS, NEXT_TIME}]
    picks = set(rng.sample(range(len(g.nodes)), 150)) | set(g.ids_with_label(STREET).tolist()) | {0}
    # one linear pass over the edge list collects every edge touching a picked node
    touching: dict[int, list] = {n: [] for n in picks}
    for e in g.edges:
        for end in {e.source, e.target}:
            if end in touching:
                touching[end].append(e)
    for node in sorted(picks):
        for kinds in kinds_pool:
            for direction in ("in", "out", "both"):
                expected = [
                    (e.edge_id, e.target if e.source == node else e.source)
                    for e in touching[node]
                    if (kinds is None or e.kind in kinds)
                    and ((direction != "in" and e.source == node) or (direction != "out" and e.target == node))
                ]
                got = [(e.edge_id, other) for e, other in neighbors(g, node, kinds, direction)]
                assert got == expected


def test_neighbors_unknown_node(small_graph):
    with pytest.raises(ArgumentError):
        neighbors(small_graph, len(small_graph.nodes))
    with pytest.raises(ArgumentError):
        neighbors(small_graph, 0, direction="sideways")


def test_adjacency_arrays_match_edges(small_graph):
    g = small_graph
    assert np.array_equal(g.edge_source, [e.source for e in g.edges])
    assert np.array_equal(g.edge_target, [e.target for e in g.edges])


# --- snapshot -------------------------------------------------------------------


def test_empty_graph_round_trip(tmp_path):
    g = StvgGraph((), (), TimeTree.from_keys([()]))
    save_snapshot(g, tmp_path / "e.stvg")
    assert load_snapshot(tmp_path / "e.stvg") == g


def test_grid_graph_round_trip(small_graph, tmp_path):
    path = tmp_path / "g.stvg"
    save_snapshot(small_graph, path)
    back = load_snapshot(path)
    assert back == small_graph
    assert back.time_tree == small_graph.time_tree
    assert snapshot_bytes(back) == path.read_bytes()


def test_snapshot_is_deterministic(workdir, tmp_path):
    spec = SyntheticSpec(crashes=300, seed=5)
    a = synthetic_graph(spec, workdir)
    from conftest import _BUILT

    _BUILT.clear()
    b = synthetic_graph(spec, workdir)
    assert a is not b
    assert snapshot_bytes(a) == snapshot_bytes(b)


def _saved(graph, path):
    save_snapshot(graph, path)
    return bytearray(path.read_bytes())


def test_corrupted_byte_is_checksum_error(small_graph, tmp_path):
    path = tmp_path / "g.stvg"
    data = _saved(small_graph, path)
    i = len(data) // 2
    data[i] = ord("7") if data[i] != ord("7") else ord("8")
    path.write_bytes(bytes(data))
    with pytest.raises(SnapshotChecksumError) as err:
        load_snapshot(path)
    assert err.value.code == "checksum"


def test_truncated_file(small_graph, tmp_path):
    path = tmp_path / "g.stvg"
    data = _saved(small_graph, path)
    path.write_bytes(bytes(data[: len(data) // 3]))
    with pytest.raises(SnapshotTruncatedError) as err:
        load_snapshot(path)
    assert err.value.code == "truncated"


def test_version_mismatch(small_graph, tmp_path):
    path = tmp_path / "g.stvg"
    data = _saved(small_graph, path)
    path.write_bytes(bytes(data).replace(b"STVG-SNAPSHOT 1", b"STVG-SNAPSHOT 9", 1))
    with pytest.raises(SnapshotVersionError) as err:
        load_snapshot(path)
    assert err.value.code == "version"


def test_not_a_snapshot(tmp_path):
    path = tmp_path / "x.stvg"
    path.write_text("hello\n")
    with pytest.raises(SnapshotError) as err:
        load_snapshot(path)
    assert err.value.code == "format"
    with pytest.raises(SnapshotError):
        load_snapshot(tmp_path / "missing.stvg")
