"""Minimal SVG line chart of USD cost over time, one line per workflow."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .costs import CostReport

WIDTH, HEIGHT = 720, 400
MARGIN = 60
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_svg(report: CostReport, title: str = "Cost in USD") -> str:
    lines: dict[str, list] = {}
    for p in report.series:
        lines.setdefault(p.workflow, []).append(p)
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
           f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<text x="{WIDTH / 2}" y="20" text-anchor="middle" font-size="14">{escape(title)}</text>']
    if not report.series:
        out.append(f'<text x="{WIDTH / 2}" y="{HEIGHT / 2}" text-anchor="middle">no price data</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"

    days = [p.date.toordinal() for p in report.series]
    d0, d1 = min(days), max(days)
    y1 = max(float(p.usd_cost) for p in report.series) or 1.0
    plot_w, plot_h = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def x(day: int) -> float:
        return MARGIN + (plot_w * (day - d0) / (d1 - d0) if d1 > d0 else plot_w / 2)

    def y(usd: float) -> float:
        return HEIGHT - MARGIN - plot_h * usd / y1

    out.append(f'<line x1="{MARGIN}" y1="{HEIGHT - MARGIN}" x2="{WIDTH - MARGIN}" '
               f'y2="{HEIGHT - MARGIN}" stroke="black"/>')
    out.append(f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{HEIGHT - MARGIN}" stroke="black"/>')
    for i in range(5):
        value = y1 * i / 4
        out.append(f'<text x="{MARGIN - 6}" y="{y(value) + 4:.1f}" text-anchor="end">{value:.2f}</text>')
    for p in (report.series[0], report.series[-1]):
        out.append(f'<text x="{x(p.date.toordinal()):.1f}" y="{HEIGHT - MARGIN + 16}" '
                   f'text-anchor="middle">{p.date.isoformat()}</text>')
    for i, (name, points) in enumerate(lines.items()):
        color = COLORS[i % len(COLORS)]
        coords = " ".join(f"{x(p.date.toordinal()):.1f},{y(float(p.usd_cost)):.1f}" for p in points)
        out.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{coords}"/>')
        out.append(f'<text x="{WIDTH - MARGIN}" y="{MARGIN + 14 * i}" text-anchor="end" '
                   f'fill="{color}">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
