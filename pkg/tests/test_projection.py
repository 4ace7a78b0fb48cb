from __future__ import annotations

import random
from collections import Counter
from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_filter
from stvg.core.graph import CONNECTS, CRASH, LOCATED_AT, NEXT_EVENT
from stvg.errors import ArgumentError
from stvg.projection import (
    CrashFilter,
    TimeWindow,
    bucket_values,
    project,
    resolve_window,
    sweep,
)

# --- brute-force oracles ----------------------------------------------------------

AGE = {"teen": (16, 19), "adult": (20, 64), "elderly": (65, 200)}
HOURS = {"morning": set(range(6, 12)), "afternoon": set(range(12, 18)), "night": set(range(18, 24)) | set(range(6))}
WEEKEND = {"Saturday", "Sunday"}


def passes(props: dict, flt: CrashFilter) -> bool:
    """Evaluate a filter against raw crash properties, one predicate at a time."""
    if flt.alcohol and not props["alcohol_related"]:
        return False
    if flt.distraction and not props["distraction_related"]:
        return False
    if flt.fatal and props["fatalities"] < 1:
        return False
    if flt.weather is not None and props["weather_condition"] not in flt.weather:
        return False
    if flt.age_bands is not None:
        age = props["age"]
        if age is None or not any(AGE[b][0] <= age <= AGE[b][1] for b in flt.age_bands):
            return False
    if flt.day_classes is not None:
        cls = "weekend" if props["day_of_week"] in WEEKEND else "weekday"
        if cls not in flt.day_classes:
            return False
    if flt.hour_bands is not None and not any(props["hour_of_day"] in HOURS[b] for b in flt.hour_bands):
        return False
    return True


def scan(graph, window: TimeWindow, flt: CrashFilter) -> set[int]:
    """Crash nodes whose timestamp lies in the window's hours and that pass the filter."""
    lo = window.start.replace(minute=0, second=0, microsecond=0)
    hi = window.end.replace(minute=0, second=0, microsecond=0) + timedelta(hours=1)
    out = set()
    for n in graph.nodes:
        if n.label != CRASH:
            continue
        ts = datetime.fromisoformat(n.properties["timestamp"])
        if lo <= ts < hi and passes(n.properties, flt):
            out.add(n.node_id)
    return out


def random_window(rng: random.Random, graph) -> TimeWindow:
    start, end = graph.time_tree.span
    total = int((end - start).total_seconds() // 3600)
    a = start + timedelta(hours=rng.randrange(-500, total + 500), minutes=rng.randrange(60))
    length = rng.choice([0, 1, 5, 24, 24 * 7, 24 * 31, 24 * 200, 24 * 900])
    return TimeWindow(a, a + timedelta(hours=rng.randrange(length + 1), minutes=rng.randrange(60)))


# --- windows ----------------------------------------------------------------------


def test_window_syntax(small_graph):
    tree = small_graph.time_tree
    assert TimeWindow.parse("2010:2015") == TimeWindow(datetime(2010, 1, 1), datetime(2015, 12, 31, 23))
    assert TimeWindow.parse("2014-03") == TimeWindow(datetime(2014, 3, 1), datetime(2014, 3, 31, 23), "month")
    assert TimeWindow.parse("2012-02") .end == datetime(2012, 2, 29, 23)
    w = TimeWindow.parse("2014-03-01T00..2014-03-07T23")
    assert (w.start, w.end) == (datetime(2014, 3, 1), datetime(2014, 3, 7, 23))
    assert TimeWindow.parse("2014-03-05").granularity == "day"
    assert TimeWindow.parse("2014-03-05T07") == TimeWindow(datetime(2014, 3, 5, 7), datetime(2014, 3, 5, 7), "hour")
    assert TimeWindow.parse("all", tree) == TimeWindow.full(tree)


@pytest.mark.parametrize("text", ["14", "2014/03", "2014-13", "2014-02-30", "2015:2010", "all", "2014-03-01T24"])
def test_bad_window_syntax(text):
    with pytest.raises(ArgumentError):
        TimeWindow.parse(text)


def test_one_hour_window_has_one_leaf(small_graph):
    tree = small_graph.time_tree
    w = TimeWindow(datetime(2013, 7, 4, 9, 15), datetime(2013, 7, 4, 9, 45))
    hours = resolve_window(tree, w)
    assert len(hours) == 1 and tree.hour_time(hours[0]) == datetime(2013, 7, 4, 9)


def test_year_window_leaf_count(small_graph):
    assert len(resolve_window(small_graph.time_tree, TimeWindow.parse("2014"))) == 8760


def test_disjoint_window_is_empty(small_graph):
    tree = small_graph.time_tree
    assert len(resolve_window(tree, TimeWindow.parse("2030"))) == 0
    assert len(resolve_window(tree, TimeWindow.parse("1999"))) == 0
    sf = project(small_graph, TimeWindow.parse("2030"))
    assert len(sf) == 0 and len(sf.edge_ids) == 0 and sf.adjacency() == {}


def test_resolve_window_matches_hour_enumeration(small_graph):
    tree = small_graph.time_tree
    leaf_times = {h: tree.hour_time(h) for h in tree.nodes_at("Hour")}
    rng = random.Random(12)
    for _ in range(200):
        w = random_window(rng, small_graph)
        lo = w.start.replace(minute=0)
        hi = w.end.replace(minute=0)
        expected = sorted(h for h, t in leaf_times.items() if lo <= t <= hi)
        assert list(resolve_window(tree, w)) == expected


# --- project --------------------------------------------------------------------


def test_full_window_keeps_every_crash(small_graph):
    sf = project(small_graph)
    assert set(sf.crash_ids.tolist()) == set(small_graph.ids_with_label(CRASH).tolist())


def test_projection_matches_predicate_scan(small_graph):
    rng = random.Random(3)
    nprng = np.random.default_rng(3)
    for _ in range(60):
        w = random_window(rng, small_graph)
        flt = random_filter(nprng)
        sf = project(small_graph, w, flt)
        assert set(sf.crash_ids.tolist()) == scan(small_graph, w, flt)


def test_footprint_edges_match_definition(small_graph):
    g = small_graph
    rng = random.Random(4)
    nprng = np.random.default_rng(4)
    for _ in range(25):
        sf = project(g, random_window(rng, g), random_filter(nprng))
        kept = set(sf.crash_ids.tolist())
        places = {e.target for e in g.edges if e.kind == LOCATED_AT and e.source in kept}
        expected = set()
        for e in g.edges:
            if e.kind == LOCATED_AT and e.source in kept:
                expected.add(e.edge_id)
            elif e.kind == NEXT_EVENT and e.source in kept and e.target in kept:
                expected.add(e.edge_id)
            elif e.kind == CONNECTS and e.target in places:
                expected.add(e.edge_id)
        assert set(sf.edge_ids.tolist()) == expected
        streets = {e.source for e in g.edges if e.edge_id in expected and e.kind == CONNECTS}
        assert set(sf.spatial_ids.tolist()) == places | streets
        # every retained LOCATED_AT edge has its crash selected
        for e in sf.edges_of_kind(LOCATED_AT).tolist():
            assert g.edges[e].source in kept
        assert list(sf.edge_ids) == sorted(sf.edge_ids)


def test_adjacency_lists_incident_edges(small_graph):
    sf = project(small_graph, TimeWindow.parse("2012-06"))
    adj = sf.adjacency()
    assert set(adj) == set(sf.node_ids.tolist())
    for node, edges in adj.items():
        for e in edges:
            rec = small_graph.edges[e]
            assert node in (rec.source, rec.target)
    assert sum(len(v) for v in adj.values()) == 2 * len(sf.edge_ids)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 50000), st.integers(0, 3000), st.integers(0, 3000), st.integers(0, 3000))
def test_enlarging_window_never_drops_crashes(small_graph, offset, length, grow_left, grow_right):
    start, _ = small_graph.time_tree.span
    a = start + timedelta(hours=offset)
    inner = TimeWindow(a, a + timedelta(hours=length))
    outer = TimeWindow(a - timedelta(hours=grow_left), a + timedelta(hours=length + grow_right))
    small = set(project(small_graph, inner).crash_ids.tolist())
    big = set(project(small_graph, outer).crash_ids.tolist())
    assert small <= big


def test_filter_conjunction(small_graph):
    rng = random.Random(6)
    nprng = np.random.default_rng(6)
    for _ in range(60):
        w = random_window(rng, small_graph)
        f1, f2 = random_filter(nprng), random_filter(nprng)
        both = set(project(small_graph, w, f1 & f2).crash_ids.tolist())
        each = set(project(small_graph, w, f1).crash_ids.tolist()) & set(project(small_graph, w, f2).crash_ids.tolist())
        assert both == each


def test_empty_filter_accepts_all():
    assert CrashFilter().is_empty
    assert CrashFilter.make().is_empty
    assert not CrashFilter.make(fatal=True).is_empty
    assert CrashFilter.make(weather="Rain", day_class="weekend").describe() == {
        "weather": ["Rain"],
        "day_classes": ["weekend"],
    }
    with pytest.raises(ArgumentError):
        CrashFilter.make(day_class="holiday")


# --- sweep ----------------------------------------------------------------------


@pytest.mark.parametrize("granularity, n", [("hour-of-day", 24), ("day-of-week", 7), ("month", 12), ("year", 6)])
def test_sweep_partitions_filtered_crashes(small_graph, granularity, n):
    flt = CrashFilter.make(distraction=True)
    buckets = sweep(small_graph, granularity, flt)
    assert [b for b, _ in buckets] == bucket_values(small_graph, granularity)
    assert len(buckets) == n
    sets = [set(sf.crash_ids.tolist()) for _, sf in buckets]
    union = set().union(*sets)
    assert sum(len(s) for s in sets) == len(union)  # disjoint
    assert union == set(project(small_graph, None, flt).crash_ids.tolist())


@pytest.mark.parametrize(
    "granularity, prop",
    [("hour-of-day", "hour_of_day"), ("day-of-week", "day_of_week"), ("month", "month_of_year"), ("year", "year")],
)
def test_sweep_counts_match_histogram(small_graph, granularity, prop):
    hist = Counter(n.properties[prop] for n in small_graph.nodes if n.label == CRASH)
    for bucket, sf in sweep(small_graph, granularity):
        assert len(sf.crash_ids) == hist.get(bucket, 0)


def test_year_sweep_on_six_years(small_graph):
    assert bucket_values(small_graph, "year") == [2010, 2011, 2012, 2013, 2014, 2015]


def test_unknown_granularity(small_graph):
    with pytest.raises(ArgumentError):
        sweep(small_graph, "decade")
