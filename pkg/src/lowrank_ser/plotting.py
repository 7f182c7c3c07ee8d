"""Dependency-free SVG scatter plots of 2-D embeddings."""
from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


@dataclass(frozen=True)
class PlotSpec:
    width: int = 640
    height: int = 480
    radius: float = 3.0
    x_label: str = "dim0"
    y_label: str = "dim1"
    title: str = ""
    palette: tuple = PALETTE

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0 or self.radius <= 0:
            raise ValueError("plot width, height and radius must be positive")

    def colors(self, classes):
        """Sorted class names mapped onto the palette in order (cycling if needed)."""
        return {c: self.palette[i % len(self.palette)] for i, c in enumerate(sorted(classes))}


def _f(v):
    return f"{v:.2f}"


def render_svg(Y, labels, spec=None):
    """Scatter ``Y`` (``n x 2``) coloured by ``labels``, with a legend on the right."""
    spec = spec or PlotSpec()
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[1] != 2:
        raise ValueError(f"plot needs exactly 2 embedding columns, got {Y.shape[-1]}")
    labels = [str(c) for c in labels]
    colors = spec.colors(set(labels))
    legend_w = 20 + 8 * max((len(c) for c in colors), default=0) + 30
    margin = 40
    pw = max(spec.width - 2 * margin - legend_w, 10)
    ph = max(spec.height - 2 * margin, 10)
    lo = Y.min(axis=0) if len(Y) else np.zeros(2)
    hi = Y.max(axis=0) if len(Y) else np.ones(2)
    span = np.where(hi - lo > 0, hi - lo, 1.0)

    def px(p):
        x = margin + (p[0] - lo[0]) / span[0] * pw
        y = margin + ph - (p[1] - lo[1]) / span[1] * ph
        return x, y

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" height="{spec.height}" '
        f'viewBox="0 0 {spec.width} {spec.height}">',
        f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{_f(pw)}" height="{_f(ph)}" '
        'fill="none" stroke="#444" stroke-width="1"/>',
    ]
    if spec.title:
        out.append(f'<text x="{margin}" y="{margin - 14}" font-family="sans-serif" '
                   f'font-size="14">{escape(spec.title)}</text>')
    out.append(f'<text x="{_f(margin + pw / 2)}" y="{spec.height - 10}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12">{escape(spec.x_label)}</text>')
    out.append(f'<text x="14" y="{_f(margin + ph / 2)}" text-anchor="middle" '
               f'font-family="sans-serif" font-size="12" '
               f'transform="rotate(-90 14 {_f(margin + ph / 2)})">{escape(spec.y_label)}</text>')
    out.append('<g class="points">')
    for p, c in zip(Y, labels):
        x, y = px(p)
        out.append(f'<circle cx="{_f(x)}" cy="{_f(y)}" r="{_f(spec.radius)}" '
                   f'fill="{colors[c]}" fill-opacity="0.8"><title>{escape(c)}</title></circle>')
    out.append('</g>')
    lx = margin + pw + 20
    out.append('<g class="legend">')
    for i, (c, col) in enumerate(colors.items()):
        ly = margin + 10 + 18 * i
        out.append(f'<rect x="{_f(lx)}" y="{ly - 8}" width="10" height="10" fill="{col}"/>')
        out.append(f'<text x="{_f(lx + 16)}" y="{ly + 1}" font-family="sans-serif" '
                   f'font-size="12">{escape(c)}</text>')
    out.append('</g>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
