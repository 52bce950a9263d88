"""Minimal deterministic SVG 1.1 scatter grids (no plotting dependency).

Output bytes depend only on the input points, so reruns of a seeded
experiment produce bitwise-identical files.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

PANEL = 220
MARGIN = 14
TITLE_H = 18


@dataclass
class Panel:
    title: str
    points: list[tuple[float, float, str]]  # (x, y, fill color)


def cluster_color(cluster_id: int) -> str:
    """Stable hex color per cluster id (golden-angle hue walk)."""
    hue = (0.12 + 0.61803398875 * int(cluster_id)) % 1.0
    r, g, b = colorsys.hls_to_rgb(hue, 0.45, 0.85)
    return f"#{int(r * 255):02x}{int(g * 255):02x}{int(b * 255):02x}"


def _bounds(rows: list[list[Panel]]) -> tuple[float, float, float, float]:
    xs = [p[0] for row in rows for panel in row for p in panel.points]
    ys = [p[1] for row in rows for panel in row for p in panel.points]
    if not xs:
        return -1.0, 1.0, -1.0, 1.0
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    pad_x = 0.05 * (x1 - x0 or 1.0)
    pad_y = 0.05 * (y1 - y0 or 1.0)
    return x0 - pad_x, x1 + pad_x, y0 - pad_y, y1 + pad_y


def scatter_grid(rows: list[list[Panel]], path) -> None:
    """Write a grid of scatter panels; all panels share one data scale."""
    cols = max(len(row) for row in rows)
    width = MARGIN + cols * (PANEL + MARGIN)
    height = MARGIN + len(rows) * (PANEL + TITLE_H + MARGIN)
    x0, x1, y0, y1 = _bounds(rows)

    def sx(x: float, ox: int) -> str:
        return f"{ox + (x - x0) / (x1 - x0) * PANEL:.2f}"

    def sy(y: float, oy: int) -> str:
        return f"{oy + (y1 - y) / (y1 - y0) * PANEL:.2f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="#ffffff"/>',
    ]
    for r, row in enumerate(rows):
        oy = MARGIN + r * (PANEL + TITLE_H + MARGIN) + TITLE_H
        for c, panel in enumerate(row):
            ox = MARGIN + c * (PANEL + MARGIN)
            parts.append(
                f'<text x="{ox}" y="{oy - 5}" font-family="monospace" '
                f'font-size="12">{panel.title}</text>')
            parts.append(
                f'<rect x="{ox}" y="{oy}" width="{PANEL}" height="{PANEL}" '
                f'fill="none" stroke="#888888"/>')
            for x, y, color in panel.points:
                parts.append(
                    f'<circle cx="{sx(x, ox)}" cy="{sy(y, oy)}" r="1.6" fill="{color}"/>')
    parts.append("</svg>")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(parts))
        fh.write("\n")
