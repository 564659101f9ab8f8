"""CSV and SVG emission for scenario reports. All output is byte-deterministic."""

from __future__ import annotations

import csv
import io
import math
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .scenarios import Curve, ScenarioReport

DENSITY_HEADER = ["t", "density"]
FIRST_CLICK_HEADER = ["attempt_index", "t", "weight", "pmf", "density", "survival_cumulative"]
SUMMARY_HEADER = [
    "curve", "engine", "delta_t", "peak_time", "peak_height", "fwhm", "mean_arrival",
    "local_maxima_count", "total_click_probability", "survival_probability",
    "escaped_probability", "conservation_residual", "scenario", "config_sha256",
    "package_version",
]

COLORS = {
    "memoryless-point": "#1f77b4",
    "memoryless-finite": "#2ca02c",
    "first-click": "#d62728",
}
EXTRA_COLORS = ["#d62728", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]


def fmt(v) -> str:
    """12 significant digits, '.' decimal separator; empty for missing values."""
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isnan(v):
        return ""
    return f"{v:.12g}"


def curve_filename(curve: Curve) -> str:
    return curve.key.replace("-", "_") + ".csv"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def curve_csv(curve: Curve) -> str:
    fc = curve.first_click
    if fc is None:
        rows = ([fmt(t), fmt(d)] for t, d in zip(curve.times, curve.density))
        return _csv_text(DENSITY_HEADER, rows)
    pmf = fc.conditional_pmf
    dens = fc.conditional_density
    rows = (
        [str(i), fmt(t), fmt(w), fmt(p), fmt(d), fmt(s)]
        for i, (t, w, p, d, s) in enumerate(
            zip(fc.attempt_times, fc.click_weights, pmf, dens, fc.survival_cumulative)
        )
    )
    return _csv_text(FIRST_CLICK_HEADER, rows)


def summary_csv(report: ScenarioReport) -> str:
    meta = report.metadata
    rows = []
    for c in report.curves:
        st, fc = c.stats, c.first_click
        rows.append([
            c.key, c.engine, fmt(c.delta_t),
            fmt(st.peak_time if st else None), fmt(st.peak_height if st else None),
            fmt(st.fwhm if st else None),
            fmt(st.mean_arrival if st else (fc.mean_arrival if fc else None)),
            fmt(st.local_maxima_count if st else None),
            fmt(fc.total_click_probability if fc else None),
            fmt(fc.survival_probability if fc else None),
            fmt(fc.escaped_probability if fc else None),
            fmt(fc.conservation_residual if fc else None),
            meta["scenario"], meta["config_sha256"], meta["package_version"],
        ])
    return _csv_text(SUMMARY_HEADER, rows)


def read_csv(path) -> tuple[list[str], np.ndarray]:
    """Read back a CSV written by emit_csv: header and a float array of rows."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    return header, data


def emit_csv(report: ScenarioReport, out_dir) -> list[Path]:
    """One file per curve plus ``summary.csv``; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for c in report.curves:
        path = out / curve_filename(c)
        path.write_bytes(curve_csv(c).encode("utf-8"))
        written.append(path)
    path = out / "summary.csv"
    path.write_bytes(summary_csv(report).encode("utf-8"))
    written.append(path)
    return written


def _nice_ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    span = hi - lo
    if span <= 0:
        return [lo]
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-12 * span:
        ticks.append(round(t, 12))
        t += step
    return ticks


def _num(v: float) -> str:
    return f"{v:.2f}"


def _color(curve: Curve, index: int) -> str:
    if curve.key in COLORS:
        return COLORS[curve.key]
    return EXTRA_COLORS[index % len(EXTRA_COLORS)]


def _legend_label(curve: Curve) -> str:
    if curve.delta_t is not None:
        return f"{curve.engine} (dt={curve.delta_t:.4g} t0)"
    return curve.engine


def render_svg(report: ScenarioReport, width: int = 800, height: int = 500) -> str:
    """Overlay all curves of a report as polylines on linear axes."""
    curves = list(report.curves)
    if not curves:
        raise ValueError("report has no curves to plot")
    left, right, top, bottom = 70, 20, 30, 60
    pw, ph = width - left - right, height - top - bottom
    win = report.scenario.window
    t_lo, t_hi = win.t_start, win.t_end
    y_hi = max(float(np.max(c.density)) for c in curves) * 1.05 or 1.0

    def sx(t):
        return left + (t - t_lo) / (t_hi - t_lo) * pw

    def sy(d):
        return top + ph - d / y_hi * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<title>{escape(report.scenario.name)}: time-of-arrival distributions</title>',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    for t in _nice_ticks(t_lo, t_hi):
        x = sx(t)
        parts.append(f'<line x1="{_num(x)}" y1="{top + ph}" x2="{_num(x)}" y2="{top + ph + 5}" stroke="black"/>')
        parts.append(f'<text x="{_num(x)}" y="{top + ph + 18}" text-anchor="middle">{t:g}</text>')
    for d in _nice_ticks(0.0, y_hi):
        y = sy(d)
        parts.append(f'<line x1="{left - 5}" y1="{_num(y)}" x2="{left}" y2="{_num(y)}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{_num(y + 4)}" text-anchor="end">{d:g}</text>')
    parts.append(f'<text x="{left + pw / 2:.2f}" y="{height - 15}" text-anchor="middle">time t [t0]</text>')
    parts.append(
        f'<text x="18" y="{top + ph / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 18 {top + ph / 2:.2f})">probability density [1/t0]</text>'
    )
    parts.append(f'<clipPath id="plot"><rect x="{left}" y="{top}" width="{pw}" height="{ph}"/></clipPath>')
    for i, c in enumerate(curves):
        pts = " ".join(f"{_num(sx(t))},{_num(sy(d))}" for t, d in zip(c.times, c.density))
        parts.append(
            f'<polyline class="curve" data-curve="{escape(c.key)}" clip-path="url(#plot)" '
            f'fill="none" stroke="{_color(c, i)}" stroke-width="1.5" points="{pts}"/>'
        )
    for i, c in enumerate(curves):
        y = top + 15 + 18 * i
        x = left + pw - 230
        parts.append(f'<line x1="{x}" y1="{y}" x2="{x + 25}" y2="{y}" stroke="{_color(c, i)}" stroke-width="2"/>')
        parts.append(f'<text x="{x + 32}" y="{y + 4}">{escape(_legend_label(c))}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_svg(report: ScenarioReport, out_dir, name: str = "figure.svg") -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_bytes(render_svg(report).encode("utf-8"))
    return path


def emit_snapshots(report: ScenarioReport, out_dir) -> list[Path]:
    """Dump click-branch snapshots and the survival branch of each first-click run."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for c in report.first_click_curves():
        fc = c.first_click
        if fc is None or fc.conditioned_states is None:
            continue
        path = out / (c.key.replace("-", "_") + "_states.npz")
        np.savez(
            path,
            x=report.scenario.grid.x,
            attempt_times=fc.attempt_times,
            click_branches=np.array([s.amplitudes for s in fc.conditioned_states]),
            survival_branch=fc.final_state.amplitudes,
        )
        written.append(path)
    return written
