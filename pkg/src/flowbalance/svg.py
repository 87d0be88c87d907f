"""Tiny SVG 1.1 chart builder.

Only what the experiment reports need: a line chart and a scatter chart,
emitted as plain strings with no styling dependencies. Output is fully
deterministic (fixed palette, fixed tick count, fixed float formatting)
so rerendering an unchanged experiment rewrites the same bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .errors import ParameterError

WIDTH = 640
HEIGHT = 420
MARGIN_LEFT = 70
MARGIN_RIGHT = 150
MARGIN_TOP = 40
MARGIN_BOTTOM = 55

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
    "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
)


@dataclass(frozen=True)
class Series:
    """One named sequence of points."""

    name: str
    xs: tuple[float, ...]
    ys: tuple[float, ...]

    def __post_init__(self):
        if len(self.xs) != len(self.ys):
            raise ParameterError(f"series {self.name!r} has mismatched lengths")
        if len(self.xs) == 0:
            raise ParameterError(f"series {self.name!r} is empty")


def _fmt(v: float) -> str:
    return format(float(v), ".6g")


def _bounds(values: Sequence[float]) -> tuple[float, float]:
    lo = min(values)
    hi = max(values)
    if hi == lo:
        lo -= 0.5
        hi += 0.5
    return lo, hi


class _Canvas:
    def __init__(self, title: str, xlabel: str, ylabel: str,
                 x_range: tuple[float, float], y_range: tuple[float, float]):
        self.parts: list[str] = []
        self.x_lo, self.x_hi = x_range
        self.y_lo, self.y_hi = y_range
        self.parts.append(
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">'
        )
        self.parts.append(f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>')
        self.parts.append(
            f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" '
            f'font-family="sans-serif" font-size="15">{escape(title)}</text>'
        )
        self._frame(xlabel, ylabel)

    def px(self, x: float) -> float:
        span = self.x_hi - self.x_lo
        frac = (x - self.x_lo) / span
        return MARGIN_LEFT + frac * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)

    def py(self, y: float) -> float:
        span = self.y_hi - self.y_lo
        frac = (y - self.y_lo) / span
        return HEIGHT - MARGIN_BOTTOM - frac * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)

    def _frame(self, xlabel: str, ylabel: str) -> None:
        x0, x1 = MARGIN_LEFT, WIDTH - MARGIN_RIGHT
        y0, y1 = MARGIN_TOP, HEIGHT - MARGIN_BOTTOM
        self.parts.append(
            f'<rect x="{x0}" y="{y0}" width="{x1 - x0}" height="{y1 - y0}" '
            f'fill="none" stroke="#444444" stroke-width="1"/>'
        )
        for t in np.linspace(self.x_lo, self.x_hi, 5):
            px = self.px(t)
            self.parts.append(
                f'<line x1="{_fmt(px)}" y1="{y1}" x2="{_fmt(px)}" y2="{y1 + 5}" '
                f'stroke="#444444"/>'
            )
            self.parts.append(
                f'<text x="{_fmt(px)}" y="{y1 + 20}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
            )
        for t in np.linspace(self.y_lo, self.y_hi, 5):
            py = self.py(t)
            self.parts.append(
                f'<line x1="{x0 - 5}" y1="{_fmt(py)}" x2="{x0}" y2="{_fmt(py)}" '
                f'stroke="#444444"/>'
            )
            self.parts.append(
                f'<text x="{x0 - 8}" y="{_fmt(py + 4)}" text-anchor="end" '
                f'font-family="sans-serif" font-size="11">{_fmt(t)}</text>'
            )
        self.parts.append(
            f'<text x="{(x0 + x1) / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13">{escape(xlabel)}</text>'
        )
        self.parts.append(
            f'<text x="18" y="{(y0 + y1) / 2}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="13" '
            f'transform="rotate(-90 18 {(y0 + y1) / 2})">{escape(ylabel)}</text>'
        )

    def legend(self, names: Sequence[str]) -> None:
        x = WIDTH - MARGIN_RIGHT + 12
        for i, name in enumerate(names):
            y = MARGIN_TOP + 14 + i * 18
            color = PALETTE[i % len(PALETTE)]
            self.parts.append(
                f'<rect x="{x}" y="{y - 9}" width="11" height="11" fill="{color}"/>'
            )
            self.parts.append(
                f'<text x="{x + 16}" y="{y}" font-family="sans-serif" '
                f'font-size="11">{escape(name)}</text>'
            )

    def render(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _ranges(series: Sequence[Series]) -> tuple[tuple[float, float], tuple[float, float]]:
    if not series:
        raise ParameterError("need at least one series")
    all_x = [x for s in series for x in s.xs]
    all_y = [y for s in series for y in s.ys]
    return _bounds(all_x), _bounds(all_y)


def line_chart(series: Sequence[Series], title: str, xlabel: str, ylabel: str) -> str:
    """Multi-series line chart with markers; returns the SVG document."""
    x_range, y_range = _ranges(series)
    canvas = _Canvas(title, xlabel, ylabel, x_range, y_range)
    for i, s in enumerate(series):
        color = PALETTE[i % len(PALETTE)]
        pts = " ".join(
            f"{_fmt(canvas.px(x))},{_fmt(canvas.py(y))}" for x, y in zip(s.xs, s.ys)
        )
        canvas.parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for x, y in zip(s.xs, s.ys):
            canvas.parts.append(
                f'<circle cx="{_fmt(canvas.px(x))}" cy="{_fmt(canvas.py(y))}" '
                f'r="3" fill="{color}"/>'
            )
    canvas.legend([s.name for s in series])
    return canvas.render()


def scatter_chart(groups: Sequence[Series], title: str, xlabel: str, ylabel: str) -> str:
    """Colored point clouds, one color per named group."""
    x_range, y_range = _ranges(groups)
    canvas = _Canvas(title, xlabel, ylabel, x_range, y_range)
    for i, g in enumerate(groups):
        color = PALETTE[i % len(PALETTE)]
        for x, y in zip(g.xs, g.ys):
            canvas.parts.append(
                f'<circle cx="{_fmt(canvas.px(x))}" cy="{_fmt(canvas.py(y))}" '
                f'r="2.5" fill="{color}" fill-opacity="0.7"/>'
            )
    canvas.legend([g.name for g in groups])
    return canvas.render()
