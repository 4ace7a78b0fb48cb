from __future__ import annotations

from datetime import datetime
from pathlib import Path

import numpy as np
import pytest

from stvg.config import RunConfig
from stvg.core.graph import (
    CONNECTS,
    CRASH,
    INTERSECTION,
    LOCATED_AT,
    NEXT_EVENT,
    STREET,
    EdgeRecord,
    NodeRecord,
    StvgGraph,
)
from stvg.core.timetree import build_time_tree
from stvg.pipeline import build_graph, prepare
from stvg.projection import CrashFilter, SubgraphFootprint
from stvg.roadprep.crashes import WEEKDAYS, RawCrash
from stvg.synth import SyntheticSpec, write_synthetic


def make_crash(crash_id: str, when: datetime, x: float = 0.0, y: float = 0.0, **kw) -> RawCrash:
    """A RawCrash whose calendar fields agree with ``when``."""
    fields = dict(
        crash_id=crash_id,
        crash_date=when.strftime("%m/%d/%Y"),
        crash_time=when.strftime("%H:%M"),
        age=40,
        hour_of_day=when.hour,
        day_of_week=WEEKDAYS[when.weekday()],
        month_of_year=when.month,
        year=when.year,
        week_number=when.isocalendar()[1],
        fatalities=0,
        injuries=0,
        alcohol_related=False,
        distraction_related=False,
        weather_condition="Clear",
        x=x,
        y=y,
        timestamp=when,
    )
    fields.update(kw)
    return RawCrash(**fields)


_BUILT: dict = {}


def synthetic_graph(spec: SyntheticSpec, workdir: Path, config: RunConfig | None = None) -> StvgGraph:
    """synth -> prepare -> build in memory, memoized per (spec, config) for the session."""
    config = config or RunConfig()
    key = (spec, config)
    if key not in _BUILT:
        out = workdir / f"synth_{len(_BUILT)}"
        roads, crashes = write_synthetic(spec, out)
        ds = prepare(roads, crashes, config)
        _BUILT[key] = build_graph(ds, config)
    return _BUILT[key]


@pytest.fixture(scope="session")
def workdir(tmp_path_factory) -> Path:
    return tmp_path_factory.mktemp("stvg")


@pytest.fixture(scope="session")
def small_graph(workdir) -> StvgGraph:
    """5x5 grid, 2000 crashes over 2010-2015 with a realistic factor mix."""
    spec = SyntheticSpec(crashes=2000, alcohol_p=0.2, distraction_p=0.2, fatal_p=0.1, seed=11)
    return synthetic_graph(spec, workdir)


def random_filter(rng: np.random.Generator) -> CrashFilter:
    """A random conjunction of zero to three predicates."""
    choices = [
        {"alcohol": True},
        {"distraction": True},
        {"fatal": True},
        {"weather": str(rng.choice(["Clear", "Cloudy", "Rain"]))},
        {"age_band": str(rng.choice(["teen", "adult", "elderly"]))},
        {"day_class": str(rng.choice(["weekday", "weekend"]))},
        {"hour_band": str(rng.choice(["morning", "afternoon", "night"]))},
    ]
    picked = rng.choice(len(choices), size=int(rng.integers(0, 4)), replace=False)
    kw: dict = {}
    for i in picked:
        kw.update(choices[i])
    return CrashFilter.make(**kw)


def random_footprint(rng: np.random.Generator, max_nodes: int = 200, max_edges: int = 2000) -> SubgraphFootprint:
    """A footprint over a random multigraph of crash, street and intersection nodes.

    Edges are arbitrary (self-loops and parallels allowed) so degree code
    cannot lean on the structure a real build would have.
    """
    n = int(rng.integers(2, max_nodes + 1))
    m = int(rng.integers(0, max_edges + 1))
    labels = rng.choice([CRASH, STREET, INTERSECTION], size=n)
    nodes = tuple(
        NodeRecord(i, str(lab), {"name": f"N{i}", "int_id": i, "crash_id": f"C{i}"}) for i, lab in enumerate(labels)
    )
    src = rng.integers(0, n, size=m)
    dst = rng.integers(0, n, size=m)
    kinds = rng.choice([LOCATED_AT, NEXT_EVENT, CONNECTS], size=m)
    edges = tuple(EdgeRecord(e, str(k), int(s), int(t)) for e, (k, s, t) in enumerate(zip(kinds, src, dst)))
    graph = StvgGraph(nodes, edges, build_time_tree(datetime(2014, 1, 1), datetime(2014, 1, 1)))
    crash_ids = np.flatnonzero(labels == CRASH)
    spatial_ids = np.flatnonzero(labels != CRASH)
    keep = np.sort(rng.choice(m, size=int(rng.integers(0, m + 1)), replace=False)) if m else np.array([], int)
    return SubgraphFootprint(graph, None, CrashFilter(), crash_ids, spatial_ids, keep.astype(np.int64))


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
