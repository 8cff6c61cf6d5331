"""Standalone SVG figures: coxcomb SOM grids, scatter plots, line charts.

Output is plain SVG 1.1 text with no plotting dependency. Elements carry
``class`` attributes (``wedge``, ``cell``, ``marker``, ``point``) so the
figures can be inspected programmatically.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

from .som import LabeledSom

CLASS_COLORS_2 = ("#d62728", "#1f77b4")
CLASS_CYCLE = ("#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
               "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")
FONT = "font-family=\"Helvetica, Arial, sans-serif\""
MIN_CELL = 40


def class_colors(n_classes: int) -> list[str]:
    """Red and blue for the first two classes, then a fixed 8-colour cycle."""
    base = list(CLASS_COLORS_2)
    return [base[c] if c < 2 else CLASS_CYCLE[(c - 2) % len(CLASS_CYCLE)]
            for c in range(n_classes)]


def attribute_colors(n_attributes: int) -> list[str]:
    out = []
    for j in range(n_attributes):
        r, g, b = colorsys.hls_to_rgb(j / n_attributes, 0.55, 0.65)
        out.append(f"#{round(r * 255):02x}{round(g * 255):02x}{round(b * 255):02x}")
    return out


def _header(width: float, height: float) -> list[str]:
    return ['<?xml version="1.0" encoding="UTF-8" standalone="no"?>',
            f'<svg version="1.1" xmlns="http://www.w3.org/2000/svg" '
            f'width="{width:.0f}" height="{height:.0f}" viewBox="0 0 {width:.0f} {height:.0f}">',
            f'<rect x="0" y="0" width="{width:.0f}" height="{height:.0f}" fill="white"/>']


def _text(x, y, s, size=12, anchor="start", extra="") -> str:
    return (f'<text x="{x:.2f}" y="{y:.2f}" font-size="{size}" text-anchor="{anchor}" '
            f'{FONT}{extra}>{escape(str(s))}</text>')


@dataclass
class CoxcombSpec:
    labeled: LabeledSom
    cell: float = 80.0
    attribute_palette: list[str] | None = None
    class_palette: list[str] | None = None
    legend: bool = True
    attribute_names: list[str] | None = None
    title: str = ""

    def __post_init__(self):
        M = self.labeled.grid.dim
        C = self.labeled.class_mass.shape[1]
        if self.attribute_palette is None:
            self.attribute_palette = attribute_colors(M)
        if self.class_palette is None:
            self.class_palette = class_colors(C)
        if len(self.attribute_palette) != M:
            raise ValueError(f"attribute palette has {len(self.attribute_palette)} colours for {M} attributes")
        if len(self.class_palette) != C:
            raise ValueError(f"class palette has {len(self.class_palette)} colours for {C} classes")
        if self.cell < MIN_CELL:
            raise ValueError(f"cells must be at least {MIN_CELL} px")


def display_weights(weights) -> np.ndarray:
    """Per-attribute min-max over the grid; attributes constant on the grid show as 0.5."""
    W = np.asarray(weights, dtype=float)
    lo, hi = W.min(axis=0), W.max(axis=0)
    span = hi - lo
    out = np.full_like(W, 0.5)
    varying = span > 0
    out[:, varying] = (W[:, varying] - lo[varying]) / span[varying]
    return out


def wedge_path(cx: float, cy: float, r: float, start: float, stop: float) -> str:
    """Circular sector from angle ``start`` to ``stop`` (radians, clockwise from 12 o'clock)."""
    def at(a):
        return cx + r * math.sin(a), cy - r * math.cos(a)

    if stop - start >= 2 * math.pi - 1e-12:
        (x0, y0), (x1, y1) = at(start), at(start + math.pi)
        return (f"M {x0:.4f} {y0:.4f} A {r:.6f} {r:.6f} 0 1 1 {x1:.4f} {y1:.4f} "
                f"A {r:.6f} {r:.6f} 0 1 1 {x0:.4f} {y0:.4f} Z")
    (x0, y0), (x1, y1) = at(start), at(stop)
    large = 1 if stop - start > math.pi else 0
    return (f"M {cx:.4f} {cy:.4f} L {x0:.4f} {y0:.4f} "
            f"A {r:.6f} {r:.6f} 0 {large} 1 {x1:.4f} {y1:.4f} Z")


def render_som_grid(spec: CoxcombSpec) -> str:
    """One polar-area diagram per neuron, framed in the neuron's class colour.

    Attribute ``j`` gets a wedge of angle ``2*pi/M`` and radius
    ``r_max * sqrt(w_j)``, so wedge area is proportional to the displayed
    weight ``w_j`` in [0, 1].
    """
    grid = spec.labeled.grid
    P, Q, M = grid.rows, grid.cols, grid.dim
    cell = spec.cell
    r_max = 0.45 * cell - 2
    top = 30.0 if spec.title else 8.0
    left = 8.0
    legend_w = 0.0
    if spec.legend:
        per_col = max(1, int((P * cell) // 16))
        legend_w = 70.0 * math.ceil(M / per_col) + 10
    width = left + Q * cell + legend_w + 8
    C = len(spec.class_palette)
    height = top + P * cell + 28
    out = _header(width, height)
    if spec.title:
        out.append(_text(width / 2, 20, spec.title, 15, "middle"))
    shown = display_weights(grid.weights)
    step = 2 * math.pi / M
    for ell in range(grid.size):
        p, q = grid.coords(ell)
        x0, y0 = left + q * cell, top + p * cell
        cx, cy = x0 + cell / 2, y0 + cell / 2
        label = int(spec.labeled.neuron_labels[ell])
        out.append(f'<g class="neuron" data-neuron="{ell}" data-class="{label}">')
        out.append(f'<rect class="cell" x="{x0 + 1.5:.2f}" y="{y0 + 1.5:.2f}" '
                   f'width="{cell - 3:.2f}" height="{cell - 3:.2f}" fill="none" '
                   f'stroke="{spec.class_palette[label]}" stroke-width="3"/>')
        for j in range(M):
            r = r_max * math.sqrt(shown[ell, j])
            out.append(f'<path class="wedge" data-attribute="{j}" data-radius="{r:.9f}" '
                       f'fill="{spec.attribute_palette[j]}" stroke="white" stroke-width="0.3" '
                       f'd="{wedge_path(cx, cy, r, j * step, (j + 1) * step)}"/>')
        out.append("</g>")
    if spec.legend:
        lx = left + Q * cell + 12
        per_col = max(1, int((P * cell) // 16))
        for j in range(M):
            col, row = divmod(j, per_col)
            x, y = lx + 70 * col, top + 16 * row
            name = spec.attribute_names[j] if spec.attribute_names else str(j + 1)
            out.append(f'<rect class="legend-swatch" x="{x:.2f}" y="{y + 2:.2f}" width="10" height="10" '
                       f'fill="{spec.attribute_palette[j]}"/>')
            out.append(_text(x + 14, y + 11, name[:9], 10))
    ky = top + P * cell + 18
    for c in range(C):
        out.append(f'<rect class="class-key" x="{left + 90 * c:.2f}" y="{ky - 10:.2f}" width="12" '
                   f'height="12" fill="none" stroke="{spec.class_palette[c]}" stroke-width="3"/>')
        out.append(_text(left + 90 * c + 18, ky, f"class {c}", 11))
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass
class ScatterSpec:
    coordinates: np.ndarray
    labels: np.ndarray
    class_palette: list[str] | None = None
    padding: float = 0.05
    size: float = 480.0
    radius: float = 3.0
    title: str = ""
    class_count: int | None = None

    def __post_init__(self):
        self.coordinates = np.asarray(getattr(self.coordinates, "coordinates", self.coordinates),
                                      dtype=float)
        self.labels = np.asarray(self.labels, dtype=int)
        if self.coordinates.ndim != 2 or self.coordinates.shape[1] != 2 or len(self.coordinates) == 0:
            raise ValueError("need a non-empty n x 2 coordinate array")
        if self.labels.shape != (self.coordinates.shape[0],):
            raise ValueError(f"{self.labels.size} labels for {self.coordinates.shape[0]} points")
        C = self.class_count or int(self.labels.max()) + 1
        if self.class_palette is None:
            self.class_palette = class_colors(C)
        if len(self.class_palette) <= int(self.labels.max()):
            raise ValueError("class palette does not cover every label")


def _scale(values, lo_px, hi_px, padding):
    lo, hi = float(values.min()), float(values.max())
    if hi == lo:
        return np.full(values.shape, 0.5 * (lo_px + hi_px))
    pad = padding * (hi - lo)
    return lo_px + (values - lo + pad) / (hi - lo + 2 * pad) * (hi_px - lo_px)


def render_scatter(spec: ScatterSpec) -> str:
    """One circle per point, coloured by class, fitted to the canvas.

    The axes are scaled independently so both directions fill the plot area.
    """
    s = spec.size
    top = 30.0 if spec.title else 10.0
    plot = (20.0, top, s - 20.0, s - 20.0)
    out = _header(s, s)
    if spec.title:
        out.append(_text(s / 2, 20, spec.title, 15, "middle"))
    out.append(f'<rect class="frame" x="{plot[0]:.2f}" y="{plot[1]:.2f}" width="{plot[2] - plot[0]:.2f}" '
               f'height="{plot[3] - plot[1]:.2f}" fill="none" stroke="#444" stroke-width="1"/>')
    xs = _scale(spec.coordinates[:, 0], plot[0], plot[2], spec.padding)
    ys = _scale(-spec.coordinates[:, 1], plot[1], plot[3], spec.padding)
    for x, y, c in zip(xs, ys, spec.labels):
        out.append(f'<circle class="marker" data-class="{c}" cx="{x:.3f}" cy="{y:.3f}" '
                   f'r="{spec.radius}" fill="{spec.class_palette[c]}" fill-opacity="0.7"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


@dataclass
class LineChartSpec:
    x_values: list
    series: dict[str, list[float]]
    title: str = ""
    x_label: str = ""
    y_label: str = ""
    width: float = 560.0
    height: float = 380.0
    colors: list[str] = field(default_factory=lambda: list(CLASS_COLORS_2) + list(CLASS_CYCLE))


def render_line_chart(spec: LineChartSpec) -> str:
    """Series over evenly spaced categorical x positions, with a legend."""
    w, h = spec.width, spec.height
    left, right, top, bottom = 60.0, w - 130.0, 36.0, h - 50.0
    out = _header(w, h)
    if spec.title:
        out.append(_text(w / 2, 22, spec.title, 15, "middle"))
    values = [v for ys in spec.series.values() for v in ys]
    lo, hi = min(values), max(values)
    if hi == lo:
        lo, hi = lo - 1, hi + 1
    pad = 0.08 * (hi - lo)
    lo, hi = lo - pad, hi + pad
    n = len(spec.x_values)
    xpos = [left + (right - left) * (0.5 if n == 1 else k / (n - 1)) for k in range(n)]
    ypos = lambda v: bottom - (v - lo) / (hi - lo) * (bottom - top)
    out.append(f'<rect class="frame" x="{left:.2f}" y="{top:.2f}" width="{right - left:.2f}" '
               f'height="{bottom - top:.2f}" fill="none" stroke="#444"/>')
    for k in range(5):
        v = lo + (hi - lo) * k / 4
        out.append(_text(left - 6, ypos(v) + 4, f"{v:.1f}", 10, "end"))
    for x, label in zip(xpos, spec.x_values):
        out.append(_text(x, bottom + 16, label, 10, "middle"))
    if spec.x_label:
        out.append(_text((left + right) / 2, h - 12, spec.x_label, 12, "middle"))
    if spec.y_label:
        out.append(_text(16, (top + bottom) / 2, spec.y_label, 12, "middle",
                         f' transform="rotate(-90 16 {(top + bottom) / 2:.2f})"'))
    for s, (name, ys) in enumerate(spec.series.items()):
        color = spec.colors[s % len(spec.colors)]
        pts = " ".join(f"{x:.2f},{ypos(v):.2f}" for x, v in zip(xpos, ys))
        out.append(f'<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{pts}"/>')
        for x, v in zip(xpos, ys):
            out.append(f'<circle class="point" cx="{x:.2f}" cy="{ypos(v):.2f}" r="3" fill="{color}"/>')
        out.append(f'<line x1="{right + 14:.2f}" y1="{top + 8 + 18 * s:.2f}" x2="{right + 34:.2f}" '
                   f'y2="{top + 8 + 18 * s:.2f}" stroke="{color}" stroke-width="2"/>')
        out.append(_text(right + 40, top + 12 + 18 * s, name, 11))
    out.append("</svg>")
    return "\n".join(out) + "\n"
