"""Minimal self-contained SVG plots of spectra, crossings and EP trajectories.

Only polylines, circles, lines and text are used, so the output opens in any
browser without a plotting library.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

DARK_BLUE = "#08306b"
LIGHT_BLUE = "#6baed6"
RED = "#d62728"
GREY = "#555555"


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return [float(t) for t in np.arange(start, hi + 0.5 * step, step)]


@dataclass
class Panel:
    """One set of axes.  Data coordinates are mapped into a pixel box."""

    title: str = ""
    xlabel: str = ""
    ylabel: str = ""
    items: list = field(default_factory=list)
    xlim: tuple[float, float] | None = None
    ylim: tuple[float, float] | None = None

    def line(self, x, y, color=GREY, width=1.0, dash=None):
        self.items.append(("line", np.asarray(x, float), np.asarray(y, float), color, width, dash))

    def points(self, x, y, color=RED, r=3.0):
        self.items.append(("pts", np.asarray(x, float), np.asarray(y, float), color, r, None))

    def vline(self, x, color="black", dash="4,3"):
        self.items.append(("vline", float(x), None, color, 1.0, dash))

    def _limits(self):
        xs, ys = [], []
        for kind, x, y, *_ in self.items:
            if kind == "vline":
                xs.append(np.array([x]))
            else:
                xs.append(x[np.isfinite(x)])
                ys.append(y[np.isfinite(y)])
        x = np.concatenate(xs) if xs else np.zeros(1)
        y = np.concatenate(ys) if ys else np.zeros(1)
        xlim = self.xlim or (float(x.min()), float(x.max()))
        ylim = self.ylim or (float(y.min()), float(y.max()))

        def pad(lim):
            lo, hi = lim
            if hi - lo <= 0:
                return lo - 1.0, hi + 1.0
            m = 0.04 * (hi - lo)
            return lo - m, hi + m

        return (xlim if self.xlim else pad(xlim)), (ylim if self.ylim else pad(ylim))

    def render(self, ox: float, oy: float, w: float, h: float) -> list[str]:
        (x0, x1), (y0, y1) = self._limits()
        left, right, top, bottom = 60.0, 15.0, 25.0, 45.0
        pw, ph = w - left - right, h - top - bottom

        def px(x):
            return ox + left + (np.asarray(x) - x0) / (x1 - x0) * pw

        def py(y):
            return oy + top + (1.0 - (np.asarray(y) - y0) / (y1 - y0)) * ph

        out = [f'<g>',
               f'<rect x="{_fmt(ox + left)}" y="{_fmt(oy + top)}" width="{_fmt(pw)}" '
               f'height="{_fmt(ph)}" fill="none" stroke="black"/>']
        out.append(f'<clipPath id="c{int(ox)}_{int(oy)}"><rect x="{_fmt(ox + left)}" '
                   f'y="{_fmt(oy + top)}" width="{_fmt(pw)}" height="{_fmt(ph)}"/></clipPath>')
        clip = f'clip-path="url(#c{int(ox)}_{int(oy)})"'
        for t in _ticks(x0, x1):
            X = px(t)
            out.append(f'<line x1="{_fmt(X)}" y1="{_fmt(oy + top + ph)}" x2="{_fmt(X)}" '
                       f'y2="{_fmt(oy + top + ph + 4)}" stroke="black"/>')
            out.append(f'<text x="{_fmt(X)}" y="{_fmt(oy + top + ph + 16)}" font-size="10" '
                       f'text-anchor="middle">{_fmt(t)}</text>')
        for t in _ticks(y0, y1):
            Y = py(t)
            out.append(f'<line x1="{_fmt(ox + left - 4)}" y1="{_fmt(Y)}" x2="{_fmt(ox + left)}" '
                       f'y2="{_fmt(Y)}" stroke="black"/>')
            out.append(f'<text x="{_fmt(ox + left - 6)}" y="{_fmt(Y + 3)}" font-size="10" '
                       f'text-anchor="end">{_fmt(t)}</text>')
        for kind, x, y, color, size, dash in self.items:
            d = f' stroke-dasharray="{dash}"' if dash else ""
            if kind == "line":
                ok = np.isfinite(x) & np.isfinite(y)
                if ok.sum() < 2:
                    continue
                pts = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px(x[ok]), py(y[ok])))
                out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                           f'stroke-width="{_fmt(size)}"{d} {clip}/>')
            elif kind == "pts":
                for a, b in zip(px(x), py(y)):
                    out.append(f'<circle cx="{_fmt(a)}" cy="{_fmt(b)}" r="{_fmt(size)}" '
                               f'fill="{color}" {clip}/>')
            else:
                X = px(x)
                out.append(f'<line x1="{_fmt(X)}" y1="{_fmt(oy + top)}" x2="{_fmt(X)}" '
                           f'y2="{_fmt(oy + top + ph)}" stroke="{color}"{d}/>')
        out.append(f'<text x="{_fmt(ox + left + pw / 2)}" y="{_fmt(oy + 16)}" font-size="12" '
                   f'text-anchor="middle">{escape(self.title)}</text>')
        out.append(f'<text x="{_fmt(ox + left + pw / 2)}" y="{_fmt(oy + h - 8)}" font-size="11" '
                   f'text-anchor="middle">{escape(self.xlabel)}</text>')
        cy = oy + top + ph / 2
        out.append(f'<text x="{_fmt(ox + 14)}" y="{_fmt(cy)}" font-size="11" text-anchor="middle" '
                   f'transform="rotate(-90 {_fmt(ox + 14)} {_fmt(cy)})">{escape(self.ylabel)}</text>')
        out.append("</g>")
        return out


def render(panels, cols: int = 1, panel_w: float = 420, panel_h: float = 320) -> str:
    """Lay out ``panels`` on a grid and return the SVG document."""
    panels = list(panels)
    rows = max(1, -(-len(panels) // cols))
    W, H = cols * panel_w, rows * panel_h
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(W)}" height="{_fmt(H)}" '
           f'viewBox="0 0 {_fmt(W)} {_fmt(H)}" font-family="sans-serif">',
           f'<rect width="{_fmt(W)}" height="{_fmt(H)}" fill="white"/>']
    for i, p in enumerate(panels):
        r, c = divmod(i, cols)
        out += p.render(c * panel_w, r * panel_h, panel_w, panel_h)
    out.append("</svg>")
    return "\n".join(out) + "\n"


def save(panels, path, **kw) -> None:
    Path(path).write_text(render(panels, **kw))


# ---------------------------------------------------------------------------
# figure types


def spectrum_panels(sweep, path) -> None:
    """Real and imaginary parts of the spectrum against lambda, one row per delta."""
    panels = []
    for k, d in enumerate(sweep.deltas):
        lines = sweep.lines(k)
        for part, name in ((np.real, "Re E"), (np.imag, "Im E")):
            p = Panel(title=f"delta = {d:g}", xlabel="lambda", ylabel=name)
            for col in range(lines.shape[1]):
                p.line(sweep.lambdas, part(lines[:, col]), color=DARK_BLUE, width=0.8)
            panels.append(p)
    save(panels, path, cols=2)


def crossing_diagram(lambdas, lines, multiplets, path, title="") -> None:
    """Eigenvalue lines of the real-lambda problem with crossings marked.

    Dashed verticals flag multiplets with more than one simultaneous crossing.
    """
    p = Panel(title=title, xlabel="lambda", ylabel="E")
    for col in range(lines.shape[1]):
        p.line(lambdas, lines[:, col], color=GREY, width=0.8)
    xs, ys = [], []
    for m in multiplets:
        if m.multiplicity > 1:
            p.vline(m.lambda_in)
        for pair in m.pairs:
            xs.append(m.lambda_in)
            ys.append(pair.energy)
    p.points(xs, ys)
    p.xlim = (float(lambdas[0]), float(lambdas[-1]))
    save([p], path, panel_w=640, panel_h=480)


def _style(m: int) -> tuple[str, float]:
    return (DARK_BLUE, 1.6) if m > 1 else (LIGHT_BLUE, 1.2)


def lambda_trajectories(records, path, positive_imag: bool = False, title="") -> None:
    """EP positions in the complex lambda-plane; clusters dark, single EPs light.

    With ``positive_imag`` each curve is conjugated where needed so that
    Im lambda >= 0.
    """
    p = Panel(title=title, xlabel="Re lambda", ylabel="Im lambda")
    starts = []
    for rec in records:
        lam = rec.lambdas
        if lam.size == 0:
            continue
        if positive_imag:
            lam = np.where(lam.imag < 0, lam.conj(), lam)
        color, width = _style(len(rec.samples[0].ep_energies))
        p.line(lam.real, lam.imag, color=color, width=width)
        starts.append(lam[0])
    if starts:
        s = np.array(starts)
        p.points(s.real, s.imag)
    save([p], path, panel_w=640, panel_h=480)


def energy_trajectories(records, path, title="") -> None:
    """EP energies in the complex plane, one curve per cluster member."""
    p = Panel(title=title, xlabel="Re E", ylabel="Im E")
    starts = []
    for rec in records:
        if not rec.samples:
            continue
        et = rec.ep_energies
        color, width = _style(et.shape[1])
        for k in range(et.shape[1]):
            p.line(et[:, k].real, et[:, k].imag, color=color, width=width)
            starts.append(et[0, k])
    if starts:
        s = np.array(starts)
        p.points(s.real, s.imag)
    save([p], path, panel_w=640, panel_h=480)
