"""CSV / JSON emission and hand-rolled SVG line charts."""

from __future__ import annotations

import csv
import html
import json
import math
from collections.abc import Sequence
from pathlib import Path

from .metrics import RoundRecord, VarianceAnalysis

BASE_COLUMNS = ["round", "aggregator", "batch_size", "test_accuracy", "test_loss", "participants"]


def fmt(x: float) -> str:
    return f"{x:.17g}"


def rounds_header(records: Sequence[RoundRecord], with_variance: bool) -> list[str]:
    header = list(BASE_COLUMNS)
    if with_variance and records:
        header += [f"inv_var_{name}" for name, _ in records[0].per_layer_mean_inv_variance]
    return header


def write_rounds_csv(path: str | Path, records: Sequence[RoundRecord], with_variance: bool = False) -> None:
    header = rounds_header(records, with_variance)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for rec in records:
            row = [
                rec.round,
                rec.aggregator,
                rec.batch_size,
                fmt(rec.test_accuracy),
                fmt(rec.test_loss),
                ";".join(str(k) for k in rec.participating_clients),
            ]
            if with_variance:
                row += [fmt(value) for _, value in rec.per_layer_mean_inv_variance]
            writer.writerow(row)


def read_rounds_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def write_json(path: str | Path, payload) -> None:
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_table(path: str | Path, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if isinstance(v, float) else v for v in row])


def write_variance_tables(out_dir: Path, analysis: VarianceAnalysis) -> list[Path]:
    by_round = out_dir / "variance_by_round.csv"
    rows = []
    for client, series in analysis.by_round.items():
        norm = dict(analysis.by_round_normalized[client])
        for r, value in series:
            rows.append([r, client, value, norm[r]])
    rows.sort(key=lambda row: (row[0], row[1]))
    write_table(by_round, ["round", "client", "mean_inv_variance", "normalized"], rows)

    by_layer = out_dir / "variance_by_layer.csv"
    write_table(
        by_layer,
        ["layer", "client", "mean_inv_variance", "normalized"],
        [[layer, client, value, analysis.by_layer_normalized[(layer, client)]]
         for (layer, client), value in analysis.by_layer.items()],
    )
    meta = out_dir / "variance_metadata.json"
    write_json(meta, {"epsilon": analysis.epsilon, **analysis.metadata})
    return [by_round, by_layer, meta]


PALETTE = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"]


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * abs(hi):
        ticks.append(round(t, 12))
        t += step
    return ticks


def line_chart_svg(
    series: dict[str, Sequence[tuple[float, float]]],
    title: str,
    x_label: str,
    y_label: str,
    width: int = 800,
    height: int = 480,
) -> str:
    """Render named (x, y) series as a standalone SVG document."""
    pad_l, pad_r, pad_t, pad_b = 70, 160, 40, 50
    points = [p for s in series.values() for p in s if math.isfinite(p[1])]
    if not points:
        xs, ys = [0.0, 1.0], [0.0, 1.0]
    else:
        xs = [p[0] for p in points]
        ys = [p[1] for p in points]
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    if x_hi == x_lo:
        x_hi = x_lo + 1
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 0.5, y_hi + 0.5
    plot_w = width - pad_l - pad_r
    plot_h = height - pad_t - pad_b

    def sx(x):
        return pad_l + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y):
        return pad_t + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{pad_l + plot_w / 2:.1f}" y="22" text-anchor="middle" font-size="15">{html.escape(title)}</text>',
        f'<rect x="{pad_l}" y="{pad_t}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#444"/>',
    ]
    for t in _nice_ticks(y_lo, y_hi):
        y = sy(t)
        out.append(f'<line x1="{pad_l}" y1="{y:.1f}" x2="{pad_l + plot_w}" y2="{y:.1f}" stroke="#ddd"/>')
        out.append(f'<text x="{pad_l - 6}" y="{y + 4:.1f}" text-anchor="end">{t:g}</text>')
    for t in _nice_ticks(x_lo, x_hi):
        x = sx(t)
        out.append(f'<line x1="{x:.1f}" y1="{pad_t + plot_h}" x2="{x:.1f}" y2="{pad_t + plot_h + 5}" stroke="#444"/>')
        out.append(f'<text x="{x:.1f}" y="{pad_t + plot_h + 18}" text-anchor="middle">{t:g}</text>')
    out.append(
        f'<text x="{pad_l + plot_w / 2:.1f}" y="{height - 10}" text-anchor="middle">{html.escape(x_label)}</text>'
    )
    out.append(
        f'<text x="16" y="{pad_t + plot_h / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {pad_t + plot_h / 2:.1f})">{html.escape(y_label)}</text>'
    )
    for i, (name, pts) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in pts if math.isfinite(y))
        if coords:
            out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{coords}"/>')
        ly = pad_t + 14 + 18 * i
        lx = pad_l + plot_w + 12
        out.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly}">{html.escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_rounds_csv(csv_paths: Sequence[str | Path], out_dir: str | Path) -> list[Path]:
    """Accuracy-vs-round chart, plus inverse-variance-vs-round when the columns exist."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    accuracy: dict[str, list[tuple[float, float]]] = {}
    inv_var: dict[str, list[tuple[float, float]]] = {}
    for path in csv_paths:
        rows = read_rounds_csv(path)
        if not rows:
            continue
        missing = set(BASE_COLUMNS) - set(rows[0])
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        tag = f"{rows[0]['aggregator']} B={rows[0]['batch_size']}"
        if len(csv_paths) > 1 and tag in accuracy:
            tag = f"{tag} ({Path(path).parent.name})"
        accuracy[tag] = [(float(r["round"]), float(r["test_accuracy"])) for r in rows]
        for col in rows[0]:
            if col.startswith("inv_var_"):
                inv_var[f"{tag} {col[len('inv_var_'):]}"] = [
                    (float(r["round"]), float(r[col])) for r in rows
                ]
    written = []
    acc_path = out_dir / "accuracy_vs_round.svg"
    acc_path.write_text(
        line_chart_svg(accuracy, "Test accuracy per round", "communication round", "test accuracy"),
        encoding="utf-8",
    )
    written.append(acc_path)
    if inv_var:
        iv_path = out_dir / "inv_variance_vs_round.svg"
        iv_path.write_text(
            line_chart_svg(inv_var, "Mean inverse variance per layer", "communication round",
                           "mean 1/(v + eps)"),
            encoding="utf-8",
        )
        written.append(iv_path)
    return written
