"""Minimal deterministic SVG line-plot writer.

Emits standalone vector graphics with no external dependency and no
timestamps, so repeated runs produce byte-identical files. Supports lines,
scatter points, filled bands and horizontal/vertical reference lines on a
linear axes box with automatic "nice" ticks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = ["Figure"]

_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 72, 18, 42, 54


def _nice_step(span: float, target_ticks: int = 6) -> float:
    if span <= 0 or not math.isfinite(span):
        return 1.0
    raw = span / target_ticks
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            return mult * mag
    return 10.0 * mag


def _ticks(lo: float, hi: float) -> list[float]:
    step = _nice_step(hi - lo)
    first = math.ceil(lo / step) * step
    out = []
    t = first
    while t <= hi + 1e-9 * step:
        out.append(0.0 if abs(t) < 1e-12 * step else t)
        t += step
    return out


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _esc(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


@dataclass
class _Element:
    kind: str
    data: dict


@dataclass
class Figure:
    width: int = 760
    height: int = 500
    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    _elements: list = field(default_factory=list)
    _legend: list = field(default_factory=list)
    _bounds: list = field(default_factory=lambda: [math.inf, -math.inf, math.inf, -math.inf])

    def _grow(self, xs, ys) -> None:
        for x in xs:
            if math.isfinite(x):
                self._bounds[0] = min(self._bounds[0], x)
                self._bounds[1] = max(self._bounds[1], x)
        for y in ys:
            if math.isfinite(y):
                self._bounds[2] = min(self._bounds[2], y)
                self._bounds[3] = max(self._bounds[3], y)

    def add_line(self, xs, ys, color="#1f77b4", width=1.5, label=None, dash=None) -> None:
        xs = [float(x) for x in xs]
        ys = [float(y) for y in ys]
        self._grow(xs, ys)
        self._elements.append(_Element("line", dict(xs=xs, ys=ys, color=color, width=width, dash=dash)))
        if label:
            self._legend.append((label, color, "line"))

    def add_points(self, xs, ys, color="#000000", radius=2.0, label=None) -> None:
        xs = [float(x) for x in xs]
        ys = [float(y) for y in ys]
        self._grow(xs, ys)
        self._elements.append(_Element("points", dict(xs=xs, ys=ys, color=color, radius=radius)))
        if label:
            self._legend.append((label, color, "point"))

    def add_band(self, xs, lower, upper, color="#ff7f0e", opacity=0.30, label=None) -> None:
        xs = [float(x) for x in xs]
        lower = [float(y) for y in lower]
        upper = [float(y) for y in upper]
        self._grow(xs, lower)
        self._grow(xs, upper)
        self._elements.append(_Element("band", dict(xs=xs, lower=lower, upper=upper, color=color, opacity=opacity)))
        if label:
            self._legend.append((label, color, "band"))

    def add_hline(self, y, color="#444444", dash="5,4", label=None) -> None:
        self._grow([], [float(y)])
        self._elements.append(_Element("hline", dict(y=float(y), color=color, dash=dash)))
        if label:
            self._legend.append((label, color, "line"))

    def _scales(self):
        x0, x1, y0, y1 = self._bounds
        if not math.isfinite(x0):
            x0, x1, y0, y1 = 0.0, 1.0, 0.0, 1.0
        if x1 <= x0:
            x1 = x0 + 1.0
        if y1 <= y0:
            y1 = y0 + 1.0
        padx = 0.04 * (x1 - x0)
        pady = 0.06 * (y1 - y0)
        x0, x1, y0, y1 = x0 - padx, x1 + padx, y0 - pady, y1 + pady
        iw = self.width - _MARGIN_L - _MARGIN_R
        ih = self.height - _MARGIN_T - _MARGIN_B

        def sx(x: float) -> float:
            return _MARGIN_L + (x - x0) / (x1 - x0) * iw

        def sy(y: float) -> float:
            return self.height - _MARGIN_B - (y - y0) / (y1 - y0) * ih

        return (x0, x1, y0, y1), sx, sy

    def render(self) -> str:
        (x0, x1, y0, y1), sx, sy = self._scales()
        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" '
            f'height="{self.height}" viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="#ffffff"/>',
        ]
        # grid and ticks
        for t in _ticks(x0, x1):
            px = sx(t)
            out.append(
                f'<line x1="{px:.2f}" y1="{sy(y0):.2f}" x2="{px:.2f}" y2="{sy(y1):.2f}" '
                f'stroke="#e5e5e5" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{px:.2f}" y="{self.height - _MARGIN_B + 18}" font-size="12" '
                f'text-anchor="middle" font-family="sans-serif">{_fmt(t)}</text>'
            )
        for t in _ticks(y0, y1):
            py = sy(t)
            out.append(
                f'<line x1="{sx(x0):.2f}" y1="{py:.2f}" x2="{sx(x1):.2f}" y2="{py:.2f}" '
                f'stroke="#e5e5e5" stroke-width="1"/>'
            )
            out.append(
                f'<text x="{_MARGIN_L - 8}" y="{py + 4:.2f}" font-size="12" '
                f'text-anchor="end" font-family="sans-serif">{_fmt(t)}</text>'
            )
        # elements
        for el in self._elements:
            d = el.data
            if el.kind == "band":
                pts = [(sx(x), sy(y)) for x, y in zip(d["xs"], d["upper"])]
                pts += [(sx(x), sy(y)) for x, y in zip(reversed(d["xs"]), reversed(d["lower"]))]
                path = " ".join(f"{px:.2f},{py:.2f}" for px, py in pts)
                out.append(
                    f'<polygon points="{path}" fill="{d["color"]}" '
                    f'fill-opacity="{d["opacity"]}" stroke="none"/>'
                )
            elif el.kind == "line":
                path = " ".join(
                    f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(d["xs"], d["ys"])
                )
                dash = f' stroke-dasharray="{d["dash"]}"' if d["dash"] else ""
                out.append(
                    f'<polyline points="{path}" fill="none" stroke="{d["color"]}" '
                    f'stroke-width="{d["width"]}"{dash}/>'
                )
            elif el.kind == "points":
                for x, y in zip(d["xs"], d["ys"]):
                    out.append(
                        f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="{d["radius"]}" '
                        f'fill="{d["color"]}"/>'
                    )
            elif el.kind == "hline":
                out.append(
                    f'<line x1="{sx(x0):.2f}" y1="{sy(d["y"]):.2f}" x2="{sx(x1):.2f}" '
                    f'y2="{sy(d["y"]):.2f}" stroke="{d["color"]}" stroke-width="1.5" '
                    f'stroke-dasharray="{d["dash"]}"/>'
                )
        # frame, labels, legend
        out.append(
            f'<rect x="{_MARGIN_L}" y="{_MARGIN_T}" width="{self.width - _MARGIN_L - _MARGIN_R}" '
            f'height="{self.height - _MARGIN_T - _MARGIN_B}" fill="none" stroke="#222222"/>'
        )
        if self.title:
            out.append(
                f'<text x="{self.width / 2:.0f}" y="24" font-size="15" text-anchor="middle" '
                f'font-family="sans-serif" font-weight="bold">{_esc(self.title)}</text>'
            )
        if self.xlabel:
            out.append(
                f'<text x="{(_MARGIN_L + self.width - _MARGIN_R) / 2:.0f}" '
                f'y="{self.height - 14}" font-size="13" text-anchor="middle" '
                f'font-family="sans-serif">{_esc(self.xlabel)}</text>'
            )
        if self.ylabel:
            cx, cy = 18, (self.height - _MARGIN_B + _MARGIN_T) / 2
            out.append(
                f'<text x="{cx}" y="{cy:.0f}" font-size="13" text-anchor="middle" '
                f'font-family="sans-serif" transform="rotate(-90 {cx} {cy:.0f})">{_esc(self.ylabel)}</text>'
            )
        for i, (label, color, kind) in enumerate(self._legend):
            ly = _MARGIN_T + 16 + 18 * i
            lx = self.width - _MARGIN_R - 170
            if kind == "point":
                out.append(f'<circle cx="{lx + 10}" cy="{ly - 4}" r="3" fill="{color}"/>')
            elif kind == "band":
                out.append(
                    f'<rect x="{lx}" y="{ly - 10}" width="20" height="10" fill="{color}" '
                    f'fill-opacity="0.4"/>'
                )
            else:
                out.append(
                    f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 20}" y2="{ly - 4}" '
                    f'stroke="{color}" stroke-width="2"/>'
                )
            out.append(
                f'<text x="{lx + 26}" y="{ly}" font-size="12" '
                f'font-family="sans-serif">{_esc(label)}</text>'
            )
        out.append("</svg>")
        return "\n".join(out) + "\n"

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.render())
