"""Static SVG phase portraits on a fixed 1024 x 1024 canvas."""

import numpy as np

SIZE = 1024
MARGIN = 32
GLYPH = 7
COLORS = {"leaf": "#3b6ea5", "orbit": "#c0392b", "curve": "#8e44ad", "glyph": "#111111"}


def _fmt(v):
    return f"{v:.2f}"


class Canvas:
    """Maps a rectangular domain onto the canvas, y pointing up."""

    def __init__(self, domain):
        (self.u0, self.u1), (self.v0, self.v1) = domain
        self.scale = (SIZE - 2 * MARGIN) / max(self.u1 - self.u0, self.v1 - self.v0)
        self.items = []

    def xy(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        px = MARGIN + (pts[:, 0] - self.u0) * self.scale
        py = SIZE - MARGIN - (pts[:, 1] - self.v0) * self.scale
        return px, py

    def polyline(self, pts, color, width=1.0, cls="leaf"):
        pts = np.asarray(pts, dtype=float)
        pts = pts[np.all(np.isfinite(pts), axis=1)]
        if len(pts) < 2:
            return
        px, py = self.xy(pts)
        coords = " ".join(f"{_fmt(a)},{_fmt(b)}" for a, b in zip(px, py))
        self.items.append(f'<polyline class="{cls}" points="{coords}" fill="none" '
                          f'stroke="{color}" stroke-width="{_fmt(width)}"/>')

    def glyph(self, p, kind, direction=None):
        (x,), (y,) = self.xy(p)
        g, c = GLYPH, COLORS["glyph"]
        if kind == "sink":
            self.items.append(f'<circle class="sink" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{g}" fill="{c}"/>')
        elif kind == "source":
            self.items.append(f'<circle class="source" cx="{_fmt(x)}" cy="{_fmt(y)}" r="{g}" '
                              f'fill="white" stroke="{c}" stroke-width="2"/>')
        elif kind == "saddle":
            self.items.append(f'<path class="saddle" d="M{_fmt(x - g)},{_fmt(y - g)}L{_fmt(x + g)},{_fmt(y + g)}'
                              f'M{_fmt(x - g)},{_fmt(y + g)}L{_fmt(x + g)},{_fmt(y - g)}" '
                              f'stroke="{c}" stroke-width="2"/>')
        else:
            d = np.array([1.0, 0.0]) if direction is None else np.asarray(direction, float)
            d = d / (np.linalg.norm(d) or 1.0)
            dx, dy = g * d[0], -g * d[1]
            self.items.append(f'<line class="rank_one" x1="{_fmt(x - dx)}" y1="{_fmt(y - dy)}" '
                              f'x2="{_fmt(x + dx)}" y2="{_fmt(y + dy)}" stroke="{c}" stroke-width="3"/>')

    def text(self, s):
        s = s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        self.items.append(f'<text x="{MARGIN}" y="{MARGIN - 10}" font-family="monospace" '
                          f'font-size="14">{s}</text>')

    def render(self):
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
                f'viewBox="0 0 {SIZE} {SIZE}">')
        frame = (f'<rect x="{MARGIN}" y="{MARGIN}" width="{SIZE - 2 * MARGIN}" '
                 f'height="{SIZE - 2 * MARGIN}" fill="none" stroke="#999999"/>')
        return "\n".join([head, frame, *self.items, "</svg>"]) + "\n"


def _split_periodic(pts, domain, periodic):
    """Break a polyline where it wraps around a periodic axis."""
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2 or not any(periodic):
        return [pts]
    cuts = np.zeros(len(pts) - 1, dtype=bool)
    for k, (per, (lo, hi)) in enumerate(zip(periodic, domain)):
        if per:
            cuts |= np.abs(np.diff(pts[:, k])) > 0.5 * (hi - lo)
    idx = np.flatnonzero(cuts) + 1
    return np.split(pts, idx)


def portrait(domain, leaves=(), critical_points=(), curves=(), orbits=(), periodic=(False, False), title=""):
    """SVG text for a foliation portrait.

    ``leaves`` and ``orbits`` are (n, 2) polylines (orbits drawn bold);
    ``critical_points`` holds (point, kind) or (point, kind, direction);
    ``curves`` are sampled critical curves drawn as bars along the samples.
    """
    cv = Canvas(domain)
    if title:
        cv.text(title)
    for leaf in leaves:
        for piece in _split_periodic(leaf, domain, periodic):
            cv.polyline(piece, COLORS["leaf"])
    for orbit in orbits:
        for piece in _split_periodic(orbit, domain, periodic):
            cv.polyline(piece, COLORS["orbit"], width=3.0, cls="orbit")
    for curve in curves:
        cv.polyline(curve, COLORS["curve"], width=4.0, cls="critical_curve")
    for item in critical_points:
        p, kind = item[0], item[1]
        cv.glyph(p, kind, item[2] if len(item) > 2 else None)
    return cv.render()
