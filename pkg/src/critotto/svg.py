"""Minimal log-log SVG plots built directly from numbers (no plotting library)."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

from .output import column, parse_csv

WIDTH, HEIGHT = 640, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 30, 40, 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf")


@dataclass
class Series:
    xs: Sequence[float]
    ys: Sequence[float]
    label: str = ""
    line: bool = False


def _decades(lo: float, hi: float) -> tuple[int, int]:
    a, b = math.floor(math.log10(lo)), math.ceil(math.log10(hi))
    return a, max(b, a + 1)


def _num(v: float) -> str:
    return f"{v:.2f}"


def loglog_svg(series: Sequence[Series], title: str = "", xlabel: str = "", ylabel: str = "",
               note: str = "") -> str:
    pts = [(x, y) for s in series for x, y in zip(s.xs, s.ys)
           if x is not None and y is not None and x > 0 and y > 0]
    if not pts:
        raise ValueError("nothing positive to plot on log axes")
    x0, x1 = _decades(min(p[0] for p in pts), max(p[0] for p in pts))
    y0, y1 = _decades(min(p[1] for p in pts), max(p[1] for p in pts))
    pw, ph = WIDTH - MARGIN_L - MARGIN_R, HEIGHT - MARGIN_T - MARGIN_B

    def px(x):
        return MARGIN_L + (math.log10(x) - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN_T + ph - (math.log10(y) - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" '
           f'stroke="black"/>']
    for e in range(x0, x1 + 1):
        X = _num(px(10.0**e))
        out.append(f'<line x1="{X}" y1="{MARGIN_T}" x2="{X}" y2="{MARGIN_T + ph}" stroke="#ddd"/>')
        out.append(f'<text x="{X}" y="{MARGIN_T + ph + 18}" text-anchor="middle">1e{e}</text>')
    for e in range(y0, y1 + 1):
        Y = _num(py(10.0**e))
        out.append(f'<line x1="{MARGIN_L}" y1="{Y}" x2="{MARGIN_L + pw}" y2="{Y}" stroke="#ddd"/>')
        out.append(f'<text x="{MARGIN_L - 8}" y="{Y}" text-anchor="end" '
                   f'dominant-baseline="middle">1e{e}</text>')
    for i, s in enumerate(series):
        color = COLORS[i % len(COLORS)]
        good = [(x, y) for x, y in zip(s.xs, s.ys)
                if x is not None and y is not None and x > 0 and y > 0]
        if s.line and len(good) >= 2:
            path = " ".join(f"{_num(px(x))},{_num(py(y))}" for x, y in good)
            out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        elif not s.line:
            out.extend(f'<circle cx="{_num(px(x))}" cy="{_num(py(y))}" r="3" fill="{color}"/>'
                       for x, y in good)
        if s.label:
            ly = MARGIN_T + 16 + 16 * i
            out.append(f'<text x="{MARGIN_L + pw - 8}" y="{ly}" text-anchor="end" '
                       f'fill="{color}">{escape(s.label)}</text>')
    out.append(f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="14">'
               f'{escape(title)}</text>')
    out.append(f'<text x="{MARGIN_L + pw / 2:.1f}" y="{HEIGHT - 18}" text-anchor="middle">'
               f'{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{MARGIN_T + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN_T + ph / 2:.1f})">{escape(ylabel)}</text>')
    if note:
        out.append(f'<text x="{MARGIN_L + 8}" y="{MARGIN_T + ph - 8}" font-size="10">'
                   f'{escape(note)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def fit_line(slope: float, intercept: float, window: tuple[float, float], label: str) -> Series:
    lo, hi = window
    return Series([lo, hi], [math.exp(intercept) * lo**slope, math.exp(intercept) * hi**slope],
                  label, line=True)


def svg_from_csv(csv_path, x_col: str, y_col: str, **kwargs) -> str:
    return svg_from_csv_text(Path(csv_path).read_text(encoding="utf-8"), x_col, y_col, **kwargs)


def svg_from_csv_text(text: str, x_col: str, y_col: str,
                      fit_window: Optional[tuple[float, float]] = None, title: str = "",
                      note: str = "", absolute: bool = False) -> str:
    """Plot one CSV column against another; the fitted line is recomputed from the data."""
    from .analysis import fit_power_law

    _, rows = parse_csv(text)
    xs, ys = column(rows, x_col), column(rows, y_col)
    if absolute:
        ys = [abs(y) if y is not None else None for y in ys]
    series = [Series(xs, ys, y_col)]
    if fit_window is not None:
        pairs = [(x, y) for x, y in zip(xs, ys) if x is not None and y is not None and y > 0]
        fit = fit_power_law([p[0] for p in pairs], [p[1] for p in pairs], fit_window)
        series.append(fit_line(fit.slope, fit.intercept, fit.window,
                               f"slope {fit.slope:.3f}, R2 {fit.r_squared:.4f}"))
    return loglog_svg(series, title, x_col, y_col, note)
