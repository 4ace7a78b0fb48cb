"""Command line interface.

Exit codes: 0 success, 2 usage error, 3 data/schema error, 4 build error.
"""

from __future__ import annotations

import functools
import json
import logging
import sys
from datetime import date
from pathlib import Path

import click
from filelock import FileLock, Timeout

from . import pipeline
from .config import RunConfig
from .core.snapshot import load_snapshot
from .errors import ArgumentError, StvgError
from .metrics import degree_centrality, fatality_profile, pagerank, resolve_targets, temporal_profile, top_k
from .projection import GRANULARITIES, CrashFilter, TimeWindow, project
from .reports import write_fatality, write_profile, write_ranked
from .synth import Hotspot, SyntheticSpec, write_synthetic

log = logging.getLogger("stvg")


def _guard(fn):
    """Translate engine errors into the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except StvgError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(exc.exit_code)

    return wrapper


class Context:
    def __init__(self, config: RunConfig, out: Path, seed: int):
        self.config = config
        self.out = out
        self.seed = seed

    def lock(self):
        self.out.mkdir(parents=True, exist_ok=True)
        return FileLock(str(self.out / ".stvg.lock"), timeout=0)


def _locked(fn):
    @functools.wraps(fn)
    def wrapper(ctx: Context, *args, **kwargs):
        try:
            with ctx.lock():
                return fn(ctx, *args, **kwargs)
        except Timeout:
            raise ArgumentError(f"output directory {ctx.out} is in use by another stvg command") from None

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="key=value RunConfig file.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default="stvg-out", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True, help="Seed for commands that sample.")
@click.option("-v", "--verbose", is_flag=True)
@click.pass_context
def main(ctx, config_path, out_dir, seed, verbose):
    """Space-time-varying graph analytics for crash high-risk locations."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        config = RunConfig.load(config_path)
    except StvgError as exc:
        raise click.UsageError(str(exc)) from None
    ctx.obj = Context(config, Path(out_dir), seed)


pass_ctx = click.make_pass_decorator(Context)


def filter_options(fn):
    opts = [
        click.option("--alcohol", is_flag=True, help="Only alcohol-related crashes."),
        click.option("--distraction", is_flag=True, help="Only distraction-related crashes."),
        click.option("--weather", help="Only crashes in this weather condition."),
        click.option("--fatal", is_flag=True, help="Only crashes with at least one fatality."),
        click.option("--age-band", help="Driver age band, e.g. teen, adult, elderly."),
        click.option("--day-class", type=click.Choice(["weekday", "weekend"])),
        click.option("--hour-band", help="Hour band, e.g. morning, afternoon, night."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _filter(ctx: Context, alcohol, distraction, weather, fatal, age_band, day_class, hour_band) -> CrashFilter:
    bands = ctx.config.bands()
    if age_band is not None and age_band not in bands.age:
        raise ArgumentError(f"unknown age band {age_band!r}; configured: {sorted(bands.age)}")
    if hour_band is not None and hour_band not in bands.hour:
        raise ArgumentError(f"unknown hour band {hour_band!r}; configured: {sorted(bands.hour)}")
    if weather is not None:
        canon = {w.lower(): w for w in ctx.config.weather_list}
        if weather.lower() not in canon:
            raise ArgumentError(f"unknown weather {weather!r}; configured: {list(ctx.config.weather_list)}")
        weather = canon[weather.lower()]
    return CrashFilter.make(alcohol, distraction, weather, fatal, age_band, day_class, hour_band)


def _provenance(ctx: Context, graph, window: TimeWindow | None, flt: CrashFilter | None) -> dict:
    prov = {
        "config_digest": ctx.config.digest,
        "snapshot_config_digest": graph.metadata.get("config_digest", ""),
        "filter": flt.describe() if flt else {},
    }
    if window is not None:
        prov["window"] = [window.start.isoformat(), window.end.isoformat()]
    return prov


def _snapshot_option(fn):
    return click.option(
        "--snapshot",
        type=click.Path(dir_okay=False),
        default=None,
        help="Graph snapshot (default: OUT/graph.stvg).",
    )(fn)


def _load(ctx: Context, snapshot):
    return load_snapshot(snapshot or ctx.out / pipeline.SNAPSHOT_FILE)


@main.command()
@click.option("--roads", required=True, type=click.Path(exists=True, dir_okay=False), help="GeoJSON or CSV roads.")
@click.option("--crashes", required=True, type=click.Path(exists=True, dir_okay=False), help="Crash table CSV.")
@click.option("--date-format", help="strptime format of Crash_DT (default %m/%d/%Y).")
@pass_ctx
@_guard
@_locked
def prep(ctx: Context, roads, crashes, date_format):
    """Geo-enrich and sequence crashes against the road network."""
    config = ctx.config.replace(date_format=date_format) if date_format else ctx.config
    ds = pipeline.prepare(roads, crashes, config)
    pipeline.write_prepared(ds, ctx.out, config)
    click.echo(json.dumps(ds.report["counts"], indent=2, sort_keys=True))


@main.command()
@click.option("--prepared", type=click.Path(file_okay=False), default=None, help="Prepared dataset (default: OUT).")
@_snapshot_option
@pass_ctx
@_guard
@_locked
def build(ctx: Context, prepared, snapshot):
    """Assemble the graph and time tree and save a snapshot."""
    path = Path(snapshot) if snapshot else ctx.out / pipeline.SNAPSHOT_FILE
    graph = pipeline.build_snapshot(prepared or ctx.out, path, ctx.config)
    click.echo(json.dumps(graph.counts(), indent=2, sort_keys=True))


@main.command()
@_snapshot_option
@click.option("--class", "target_class", type=click.Choice(["street", "intersection"]), required=True)
@click.option("--metric", type=click.Choice(["degree", "pagerank"]), default="degree", show_default=True)
@click.option("--window", default="all", show_default=True,
              help="e.g. 2010:2015, 2014-03, 2014-03-01T00..2014-03-07T23")
@click.option("--k", type=click.IntRange(min=1), default=20, show_default=True)
@filter_options
@pass_ctx
@_guard
@_locked
def rank(ctx: Context, snapshot, target_class, metric, window, k, **filters):
    """Top-k streets or intersections by degree or PageRank."""
    graph = _load(ctx, snapshot)
    win = TimeWindow.parse(window, graph.time_tree)
    flt = _filter(ctx, **filters)
    sf = project(graph, win, flt, ctx.config.bands())
    if metric == "degree":
        scores = degree_centrality(sf, target_class)
        extra = {}
    elif len(sf) == 0:
        scores = degree_centrality(sf, target_class)  # empty window: nothing to rank
        extra = {"pagerank": {"converged": True, "iterations": 0}}
    else:
        scores = pagerank(sf, ctx.config.pagerank_config(), target_class)
        extra = {
            "pagerank": {
                "converged": scores.converged,
                "iterations": scores.iterations,
                "monotone_deltas": scores.monotone,
                **ctx.config.pagerank_config().__dict__,
            }
        }
    table = top_k(scores, k)
    table.extra.update(extra)
    stem = f"rank_{target_class}_{metric}"
    write_ranked(table, ctx.out, stem, _provenance(ctx, graph, win, flt))
    for row in table.rows:
        click.echo(f"{row.rank}\t{row.name}\t{row.label}\t{row.score}")


@main.command()
@_snapshot_option
@click.option("--granularity", type=click.Choice(GRANULARITIES), required=True)
@click.option("--target", "targets", multiple=True, required=True, help="Street name or intersection id; repeatable.")
@filter_options
@pass_ctx
@_guard
@_locked
def profile(ctx: Context, snapshot, granularity, targets, **filters):
    """Per-bucket crash degree of selected streets/intersections (CSV + SVG)."""
    graph = _load(ctx, snapshot)
    flt = _filter(ctx, **filters)
    resolve_targets(graph, targets)
    series = temporal_profile(graph, granularity, targets, flt, ctx.config.bands())
    write_profile(series, granularity, ctx.out, f"profile_{granularity}", _provenance(ctx, graph, None, flt))
    for target, pts in series.items():
        click.echo(f"{target}\t" + " ".join(f"{b}:{s}" for b, s in pts))


@main.command()
@_snapshot_option
@click.option("--class", "target_class", type=click.Choice(["street", "intersection"]), required=True)
@click.option("--window", default="all", show_default=True)
@click.option("--top", type=click.IntRange(min=1), default=20, show_default=True, help="Rows drawn in the chart.")
@pass_ctx
@_guard
@_locked
def fatality(ctx: Context, snapshot, target_class, window, top):
    """Overall vs fatal-crash degree per street or intersection."""
    graph = _load(ctx, snapshot)
    win = TimeWindow.parse(window, graph.time_tree)
    rows = fatality_profile(graph, win, target_class, ctx.config.bands())
    write_fatality(rows, ctx.out, f"fatality_{target_class}", _provenance(ctx, graph, win, None), top)
    for r in rows[:top]:
        click.echo(f"{r.label}\t{r.name}\t{r.overall}\t{r.fatal}")


def _grid(text: str) -> tuple[int, int]:
    try:
        r, c = text.lower().split("x")
        return int(r), int(c)
    except ValueError:
        raise click.BadParameter(f"expected ROWSxCOLS, got {text!r}") from None


@main.command()
@click.option("--grid", default="5x5", show_default=True, help="Intersections per side, ROWSxCOLS.")
@click.option("--spacing", type=float, default=200.0, show_default=True)
@click.option("--crashes", "n_crashes", type=int, default=1000, show_default=True)
@click.option("--start", default="2010-01-01", show_default=True)
@click.option("--end", default="2015-12-31", show_default=True)
@click.option("--hotspot", "hotspots", multiple=True, help="int:ROW,COL@MULT[@START/END] or STREET@MULT[...]")
@click.option("--intersection-share", type=float, default=0.3, show_default=True)
@click.option("--fatal-p", type=float, default=0.02, show_default=True)
@click.option("--alcohol-p", type=float, default=0.05, show_default=True)
@click.option("--distraction-p", type=float, default=0.1, show_default=True)
@click.option("--orphan-p", type=float, default=0.0, show_default=True)
@pass_ctx
@_guard
@_locked
def synth(ctx: Context, grid, spacing, n_crashes, start, end, hotspots, intersection_share, fatal_p, alcohol_p,
          distraction_p, orphan_p):
    """Generate a synthetic grid road network and crash table."""
    rows, cols = _grid(grid)
    try:
        start_d, end_d = date.fromisoformat(start), date.fromisoformat(end)
    except ValueError as exc:
        raise ArgumentError(str(exc)) from None
    spec = SyntheticSpec(
        rows=rows,
        cols=cols,
        spacing=spacing,
        crashes=n_crashes,
        start=start_d,
        end=end_d,
        hotspots=tuple(Hotspot.parse(h) for h in hotspots),
        intersection_share=intersection_share,
        fatal_p=fatal_p,
        alcohol_p=alcohol_p,
        distraction_p=distraction_p,
        orphan_p=orphan_p,
        seed=ctx.seed,
    )
    roads, crashes = write_synthetic(spec, ctx.out)
    click.echo(f"{roads}\n{crashes}")


@main.command()
@_snapshot_option
@pass_ctx
@_guard
def dump(ctx: Context, snapshot):
    """Print node/edge counts per label/kind as JSON."""
    graph = _load(ctx, snapshot)
    click.echo(json.dumps(graph.counts(), indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
