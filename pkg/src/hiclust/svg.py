"""Minimal static SVG charts and the HI figure."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

from .hi import HiProfile
from .io import write_hi_table

# qualitative palette; index 0 is reserved for noise
PALETTE = ("#9e9e9e", "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
           "#8c564b", "#e377c2", "#17becf", "#bcbd22", "#7f7f7f")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


class SvgChart:
    """An x/y chart with a linear x axis and a linear or log10 y axis.

    Coordinates are mapped into a plot box inside fixed margins.  Series are
    appended as polylines or point clouds; :meth:`render` returns the text.
    """

    def __init__(self, x_range, y_range, width=800, height=480, log_y=False,
                 title="", x_label="", y_label=""):
        self.width, self.height = width, height
        self.margin = (60, 20, 40, 70)  # top, right, bottom, left
        self.log_y = log_y
        self.x0, self.x1 = map(float, x_range)
        y0, y1 = map(float, y_range)
        if log_y:
            y0, y1 = math.log10(y0), math.log10(y1)
        if self.x1 <= self.x0:
            self.x1 = self.x0 + 1.0
        if y1 <= y0:
            y1 = y0 + 1.0
        self.y0, self.y1 = y0, y1
        self.title, self.x_label, self.y_label = title, x_label, y_label
        self._body = []

    def _px(self, x, y):
        top, right, bottom, left = self.margin
        w = self.width - left - right
        h = self.height - top - bottom
        y = np.log10(y) if self.log_y else np.asarray(y, float)
        px = left + (np.asarray(x, float) - self.x0) / (self.x1 - self.x0) * w
        py = top + h - (y - self.y0) / (self.y1 - self.y0) * h
        return px, py

    def polyline(self, x, y, color="#000000", width=1.5, label=None):
        px, py = self._px(x, y)
        pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
        self._body.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{width}" points="{pts}"/>'
        )
        if label:
            self._legend(label, color)

    def points(self, x, y, colors, radius=1.6):
        px, py = self._px(x, y)
        for a, b, c in zip(px, py, colors):
            self._body.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="{radius}" fill="{c}"/>')

    def _legend(self, label, color):
        n = sum(1 for s in self._body if s.startswith("<text class=\"legend\""))
        x, y = self.width - self.margin[1] - 150, self.margin[0] + 14 + 16 * n
        self._body.append(f'<line x1="{x}" y1="{y - 4}" x2="{x + 18}" y2="{y - 4}" stroke="{color}" stroke-width="3"/>')
        self._body.append(f'<text class="legend" x="{x + 24}" y="{y}">{escape(label)}</text>')

    def _axes(self):
        top, right, bottom, left = self.margin
        x_end, y_end = self.width - right, self.height - bottom
        out = [
            f'<line x1="{left}" y1="{y_end}" x2="{x_end}" y2="{y_end}" stroke="#000"/>',
            f'<line x1="{left}" y1="{top}" x2="{left}" y2="{y_end}" stroke="#000"/>',
        ]
        for v in np.linspace(self.x0, self.x1, 6):
            px, _ = self._px([v], [10 ** self.y0 if self.log_y else self.y0])
            out.append(f'<text x="{_fmt(px[0])}" y="{y_end + 16}" text-anchor="middle">{v:.0f}</text>')
        lo, hi = self.y0, self.y1
        ticks = (range(math.ceil(lo), math.floor(hi) + 1) if self.log_y else np.linspace(lo, hi, 5))
        for v in ticks:
            val = 10.0 ** v if self.log_y else v
            _, py = self._px([self.x0], [val])
            text = f"1e{int(v)}" if self.log_y else f"{v:.3g}"
            out.append(f'<text x="{left - 6}" y="{_fmt(py[0] + 4)}" text-anchor="end">{text}</text>')
        out.append(f'<text x="{(left + x_end) / 2}" y="{self.height - 6}" text-anchor="middle">{escape(self.x_label)}</text>')
        out.append(
            f'<text x="14" y="{(top + y_end) / 2}" text-anchor="middle" '
            f'transform="rotate(-90 14 {(top + y_end) / 2})">{escape(self.y_label)}</text>'
        )
        if self.title:
            out.append(f'<text x="{self.width / 2}" y="24" text-anchor="middle" font-size="15">{escape(self.title)}</text>')
        return out

    def render(self) -> str:
        head = (
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="11">'
        )
        bg = f'<rect width="{self.width}" height="{self.height}" fill="#ffffff"/>'
        return "\n".join([head, bg, *self._axes(), *self._body, "</svg>"]) + "\n"


def hi_figure_svg(profile: HiProfile, labels=None) -> str:
    """The HI figure: sorted out-degrees as a curve, permuted in-degrees as
    points coloured by label (grey when unlabelled or noise)."""
    ranks = np.arange(profile.n)
    both = np.concatenate([profile.sorted_out, profile.permuted_in])
    chart = SvgChart(
        (0, max(profile.n - 1, 1)), (both.min() / 1.5, both.max() * 1.5), log_y=True,
        title=f"HI figure (t = {profile.t})" if profile.t is not None else "HI figure",
        x_label="rank by out-degree", y_label="degree",
    )
    if labels is None:
        colors = [PALETTE[1]] * profile.n
    else:
        lab = np.asarray(labels)[profile.perm]
        colors = [PALETTE[0] if v == 0 else PALETTE[1 + (int(v) - 1) % (len(PALETTE) - 1)] for v in lab]
    chart.points(ranks, profile.permuted_in, colors)
    chart.polyline(ranks, profile.sorted_out, color="#000000", width=2.0, label="out-degree (sorted)")
    return chart.render()


def emit_hi_figure(profile: HiProfile, labels, table_path, svg_path) -> None:
    """Write the HI table and the HI figure."""
    write_hi_table(table_path, profile, labels)
    with open(svg_path, "w") as fh:
        fh.write(hi_figure_svg(profile, labels))
