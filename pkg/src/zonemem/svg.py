"""Minimal static SVG line charts (frame on x, count on y)."""

from __future__ import annotations

from typing import Mapping, Sequence
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e")


def _nice_max(v: float) -> float:
    if v <= 0:
        return 1.0
    for step in (1, 2, 5, 10, 20, 25, 50, 100, 200, 250, 500, 1000, 2000, 5000):
        if v <= step * 5:
            return float(step * 5)
    return float(v)


def line_chart(
    series: Mapping[str, Sequence[float]],
    title: str,
    ylabel: str,
    x: int = 0,
    y: int = 0,
    width: int = 600,
    height: int = 240,
) -> str:
    """One chart as an SVG ``<g>`` group positioned at (x, y)."""
    left, right, top, bottom = 56, 12, 24, 32
    pw, ph = width - left - right, height - top - bottom
    n = max((len(v) for v in series.values()), default=0)
    xmax = max(n - 1, 1)
    ymax = _nice_max(max((max(v) for v in series.values() if len(v)), default=0))
    out = [f'<g transform="translate({x},{y})">']
    out.append(f'<text x="{left}" y="16" font-size="13" font-family="sans-serif">{escape(title)}</text>')
    out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#888"/>')
    for k in range(6):
        val = ymax * k / 5
        yy = top + ph - ph * k / 5
        out.append(f'<line x1="{left - 4}" y1="{yy:.1f}" x2="{left}" y2="{yy:.1f}" stroke="#888"/>')
        out.append(
            f'<text x="{left - 6}" y="{yy + 4:.1f}" font-size="10" text-anchor="end" '
            f'font-family="sans-serif">{val:g}</text>'
        )
    out.append(
        f'<text x="{left + pw / 2:.1f}" y="{height - 4}" font-size="11" text-anchor="middle" '
        f'font-family="sans-serif">frame</text>'
    )
    out.append(
        f'<text x="12" y="{top + ph / 2:.1f}" font-size="11" text-anchor="middle" font-family="sans-serif" '
        f'transform="rotate(-90 12 {top + ph / 2:.1f})">{escape(ylabel)}</text>'
    )
    for i, (name, values) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(
            f"{left + pw * j / xmax:.1f},{top + ph - ph * min(v, ymax) / ymax:.1f}" for j, v in enumerate(values)
        )
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        out.append(
            f'<text x="{left + pw - 4}" y="{top + 14 + 14 * i}" font-size="11" text-anchor="end" '
            f'fill="{color}" font-family="sans-serif">{escape(name)}</text>'
        )
    out.append("</g>")
    return "\n".join(out)


def panels(charts: Sequence[tuple[Mapping[str, Sequence[float]], str, str]], width: int = 600, height: int = 240) -> str:
    body = [line_chart(s, t, yl, 0, i * height, width, height) for i, (s, t, yl) in enumerate(charts)]
    total_h = height * len(charts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{total_h}" '
        f'viewBox="0 0 {width} {total_h}">\n<rect width="100%" height="100%" fill="white"/>\n'
        + "\n".join(body)
        + "\n</svg>\n"
    )


def trace_svg(trace) -> str:
    """Cumulative retrieve, cumulative remove and WM size for one trace."""
    label = trace.policy
    return panels(
        [
            ({label: trace.series("cumulative_unloads")}, f"{trace.scenario}: cumulative remove", "signatures"),
            ({label: trace.series("cumulative_loads")}, f"{trace.scenario}: cumulative retrieve", "signatures"),
            (
                {f"{label} end": trace.series("wm_size_end"), f"{label} peak": trace.series("wm_size_peak")},
                f"{trace.scenario}: working memory size",
                "signatures",
            ),
        ]
    )


def comparison_svg(trace_a, trace_b) -> str:
    a, b = trace_a.policy, trace_b.policy
    return panels(
        [
            (
                {a: trace_a.series("cumulative_unloads"), b: trace_b.series("cumulative_unloads")},
                f"{trace_a.scenario} compare: cumulative remove",
                "signatures",
            ),
            (
                {a: trace_a.series("cumulative_loads"), b: trace_b.series("cumulative_loads")},
                f"{trace_a.scenario} compare: cumulative retrieve",
                "signatures",
            ),
            (
                {a: trace_a.series("wm_size_end"), b: trace_b.series("wm_size_end")},
                f"{trace_a.scenario} compare: working memory size",
                "signatures",
            ),
        ]
    )
