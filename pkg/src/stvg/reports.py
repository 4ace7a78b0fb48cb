"""Report files: ranked tables, profile series, fatality pairs, SVG charts.

Every file carries the run-config digest: CSV as a leading ``#`` comment,
JSON as a ``provenance`` object, SVG inside ``<metadata>``.
"""

from __future__ import annotations

import csv
import io
import json
from collections.abc import Sequence
from pathlib import Path
from xml.sax.saxutils import escape

from .metrics import FatalityRow, RankedTable

PALETTE = ("#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")


def _fmt(score) -> str:
    return str(score) if isinstance(score, int) else repr(float(score))


def _csv_text(header: Sequence[str], rows, digest: str) -> str:
    buf = io.StringIO()
    buf.write(f"# run_config_digest={digest}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _json_text(payload: dict) -> str:
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_ranked(table: RankedTable, out_dir: Path, stem: str, provenance: dict) -> tuple[Path, Path]:
    csv_path, json_path = out_dir / f"{stem}.csv", out_dir / f"{stem}.json"
    rows = [(r.rank, r.name, r.label, _fmt(r.score)) for r in table.rows]
    csv_path.write_text(_csv_text(("rank", "name", "id", "score"), rows, provenance["config_digest"]), "utf-8")
    payload = {
        "provenance": provenance,
        "metric": table.metric,
        "class": table.target_class,
        "k": table.k,
        "rows": [{"rank": r.rank, "name": r.name, "id": r.label, "score": r.score} for r in table.rows],
    }
    payload.update(table.extra)
    json_path.write_text(_json_text(payload), "utf-8")
    return csv_path, json_path


def write_profile(
    series: dict[str, list[tuple[object, int]]],
    granularity: str,
    out_dir: Path,
    stem: str,
    provenance: dict,
) -> tuple[Path, Path]:
    csv_path, svg_path = out_dir / f"{stem}.csv", out_dir / f"{stem}.svg"
    rows = [(bucket, target, score) for target, pts in series.items() for bucket, score in pts]
    csv_path.write_text(_csv_text(("bucket", "target", "score"), rows, provenance["config_digest"]), "utf-8")
    buckets = [str(b) for b, _ in next(iter(series.values()))] if series else []
    svg = line_chart(
        f"Crash degree by {granularity}",
        buckets,
        {t: [s for _, s in pts] for t, pts in series.items()},
        x_label=granularity,
        y_label="degree",
        digest=provenance["config_digest"],
    )
    svg_path.write_text(svg, "utf-8")
    return csv_path, svg_path


def write_fatality(rows: list[FatalityRow], out_dir: Path, stem: str, provenance: dict, top: int = 20):
    csv_path, svg_path = out_dir / f"{stem}.csv", out_dir / f"{stem}.svg"
    body = [(r.label, r.name, r.overall, r.fatal) for r in rows]
    csv_path.write_text(_csv_text(("id", "name", "overall_degree", "fatality_degree"), body,
                                  provenance["config_digest"]), "utf-8")
    shown = rows[:top]
    svg = bar_chart(
        "Fatality degree vs overall degree",
        [r.label for r in shown],
        {"overall": [r.overall for r in shown], "fatal": [r.fatal for r in shown]},
        y_label="degree",
        digest=provenance["config_digest"],
    )
    svg_path.write_text(svg, "utf-8")
    return csv_path, svg_path


_W, _H = 720, 400
_L, _R, _T, _B = 70, 150, 40, 60


def _frame(title: str, x_label: str, y_label: str, y_max: float, digest: str) -> list[str]:
    plot_h = _H - _T - _B
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" viewBox="0 0 {_W} {_H}">',
        f"<metadata>run_config_digest={digest}</metadata>",
        f'<title>{escape(title)}</title>',
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
        f'<text class="title" x="{_W / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
        f'<line class="axis" x1="{_L}" y1="{_H - _B}" x2="{_W - _R}" y2="{_H - _B}" stroke="black"/>',
        f'<line class="axis" x1="{_L}" y1="{_T}" x2="{_L}" y2="{_H - _B}" stroke="black"/>',
        f'<text class="x-label" x="{(_L + _W - _R) / 2:.1f}" y="{_H - 12}" text-anchor="middle" font-size="12">'
        f"{escape(x_label)}</text>",
        f'<text class="y-label" x="16" y="{(_T + _H - _B) / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {(_T + _H - _B) / 2:.1f})">{escape(y_label)}</text>',
    ]
    for i in range(5):
        value = y_max * i / 4
        y = _H - _B - plot_h * i / 4
        out.append(
            f'<text class="y-tick" x="{_L - 6}" y="{y + 4:.1f}" text-anchor="end" font-size="10">{value:g}</text>'
        )
    return out


def _x_ticks(buckets: Sequence[str], xs: Sequence[float]) -> list[str]:
    step = max(1, len(buckets) // 12)
    return [
        f'<text class="x-tick" x="{x:.1f}" y="{_H - _B + 16}" text-anchor="middle" font-size="10">{escape(b)}</text>'
        for i, (b, x) in enumerate(zip(buckets, xs))
        if i % step == 0
    ]


def _legend(names: Sequence[str]) -> list[str]:
    out = []
    for i, name in enumerate(names):
        y = _T + 16 * i
        color = PALETTE[i % len(PALETTE)]
        out.append(f'<rect x="{_W - _R + 12}" y="{y}" width="10" height="10" fill="{color}"/>')
        out.append(f'<text class="legend" x="{_W - _R + 28}" y="{y + 9}" font-size="11">{escape(name)}</text>')
    return out


def line_chart(
    title: str,
    buckets: Sequence[str],
    series: dict[str, Sequence[float]],
    x_label: str,
    y_label: str,
    digest: str = "",
) -> str:
    y_max = max((max(v) for v in series.values() if len(v)), default=0) or 1
    plot_w, plot_h = _W - _L - _R, _H - _T - _B
    n = max(len(buckets), 1)
    xs = [_L + plot_w * (i + 0.5) / n for i in range(len(buckets))]
    out = _frame(title, x_label, y_label, y_max, digest) + _x_ticks(buckets, xs)
    for i, (name, values) in enumerate(series.items()):
        pts = " ".join(f"{x:.1f},{_H - _B - plot_h * v / y_max:.1f}" for x, v in zip(xs, values))
        color = PALETTE[i % len(PALETTE)]
        out.append(
            f'<polyline class="series" data-target="{escape(name)}" fill="none" stroke="{color}" '
            f'stroke-width="2" points="{pts}"/>'
        )
    out += _legend(list(series))
    out.append("</svg>")
    return "\n".join(out) + "\n"


def bar_chart(
    title: str,
    categories: Sequence[str],
    series: dict[str, Sequence[float]],
    y_label: str,
    digest: str = "",
) -> str:
    y_max = max((max(v) for v in series.values() if len(v)), default=0) or 1
    plot_w, plot_h = _W - _L - _R, _H - _T - _B
    n = max(len(categories), 1)
    slot = plot_w / n
    width = slot * 0.8 / max(len(series), 1)
    xs = [_L + slot * (i + 0.5) for i in range(len(categories))]
    out = _frame(title, "", y_label, y_max, digest) + _x_ticks(categories, xs)
    for si, (name, values) in enumerate(series.items()):
        color = PALETTE[si % len(PALETTE)]
        for ci, v in enumerate(values):
            h = plot_h * v / y_max
            x = _L + slot * ci + slot * 0.1 + width * si
            out.append(
                f'<rect class="bar" data-series="{escape(name)}" x="{x:.1f}" y="{_H - _B - h:.1f}" '
                f'width="{width:.1f}" height="{h:.1f}" fill="{color}"/>'
            )
    out += _legend(list(series))
    out.append("</svg>")
    return "\n".join(out) + "\n"
