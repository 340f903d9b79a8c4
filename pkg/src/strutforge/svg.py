"""SVG figures of force systems, obstacles and strut nets."""

from __future__ import annotations

from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from .envelope import StrutNet

CANVAS = 640.0
PAD = 0.05
MIN_WIDTH = 0.6
MAX_WIDTH = 6.0

STRUT = "#1f3a93"
OBSTACLE = "#9e9e9e"
HULL = "#bdbdbd"
LOAD = "#000000"
REACTIVE = "#c0392b"
GAMMA = "#2e7d32"


def _fmt(v: float) -> str:
    s = f"{v:.3f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Frame:
    """World to canvas map; y stays up, the flip is a group transform."""

    def __init__(self, pts: np.ndarray):
        lo = pts.min(axis=0)
        hi = pts.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        lo = lo - PAD * span
        hi = hi + PAD * span
        span = hi - lo
        self.k = CANVAS / float(span.max())
        self.lo = lo
        self.w = float(span[0] * self.k)
        self.h = float(span[1] * self.k)

    def xy(self, p) -> tuple[float, float]:
        q = (np.asarray(p, float) - self.lo) * self.k
        return float(q[0]), float(q[1])

    def path(self, pts) -> str:
        return " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in (self.xy(p) for p in pts))


def render(
    points=None,
    loads=None,
    reactive: Sequence[int] = (),
    net: StrutNet | None = None,
    obstacles=(),
    hull=None,
    gamma=None,
    force_scale: float | None = None,
    title: str = "",
) -> str:
    """SVG text for one figure.

    ``force_scale`` multiplies load vectors into world lengths; the default
    makes the largest arrow a tenth of the drawing size.
    """
    clouds = []
    P = None if points is None else np.asarray(points, float).reshape(-1, 2)
    if P is not None and len(P):
        clouds.append(P)
    if net is not None and len(net.nodes):
        clouds.append(net.nodes)
    for ob in obstacles:
        clouds.append(np.asarray(getattr(ob, "vertices", ob), float))
    if not clouds:
        clouds.append(np.zeros((1, 2)))
    allpts = np.vstack(clouds)
    L = None if loads is None else np.nan_to_num(np.asarray(loads, float).reshape(-1, 2))
    if L is not None and P is not None:
        fmax = float(np.hypot(*L.T).max()) if len(L) else 0.0
        diag = float(np.hypot(*np.ptp(allpts, axis=0)))
        s = force_scale if force_scale is not None else (0.1 * diag / fmax if fmax > 0 else 0.0)
        tails = P - s * L
        allpts = np.vstack((allpts, tails))
    fr = _Frame(allpts)
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_fmt(fr.w)}" height="{_fmt(fr.h)}" '
        f'viewBox="0 0 {_fmt(fr.w)} {_fmt(fr.h)}">',
        f"<!-- strutforge {__version__} -->",
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(
        '<defs><marker id="head" viewBox="0 0 10 10" refX="10" refY="5" markerWidth="6" markerHeight="6" '
        'orient="auto-start-reverse"><path d="M0,0 L10,5 L0,10 z" fill="context-stroke"/></marker></defs>'
    )
    out.append(f'<g transform="translate(0 {_fmt(fr.h)}) scale(1 -1)">')
    if hull is not None:
        out.append(f'<polygon points="{fr.path(hull.vertices)}" fill="none" stroke="{HULL}" stroke-width="1" stroke-dasharray="4 3"/>')
    if gamma is not None:
        out.append(f'<polygon points="{fr.path(gamma.vertices)}" fill="{GAMMA}" fill-opacity="0.25" stroke="{GAMMA}" stroke-width="1"/>')
    for ob in obstacles:
        V = np.asarray(getattr(ob, "vertices", ob), float)
        out.append(f'<polygon points="{fr.path(V)}" fill="{OBSTACLE}" fill-opacity="0.6" stroke="{OBSTACLE}" stroke-width="0.5"/>')
    if net is not None and net.n_struts:
        Fmax = float(net.forces.max()) or 1.0
        for (a, b), F in zip(net.edges, net.forces):
            w = max(MIN_WIDTH, MAX_WIDTH * float(F) / Fmax)
            (x1, y1), (x2, y2) = fr.xy(net.nodes[a]), fr.xy(net.nodes[b])
            out.append(
                f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
                f'stroke="{STRUT}" stroke-width="{_fmt(w)}" stroke-linecap="round"/>'
            )
    if P is not None:
        rset = set(int(i) for i in reactive)
        if L is not None:
            for i, (p, t) in enumerate(zip(P, tails)):
                if not np.any(L[i]):
                    continue
                col = REACTIVE if i in rset else LOAD
                (x1, y1), (x2, y2) = fr.xy(t), fr.xy(p)
                out.append(
                    f'<line x1="{_fmt(x1)}" y1="{_fmt(y1)}" x2="{_fmt(x2)}" y2="{_fmt(y2)}" '
                    f'stroke="{col}" stroke-width="1.2" marker-end="url(#head)"/>'
                )
        for i, p in enumerate(P):
            x, y = fr.xy(p)
            col = REACTIVE if i in rset else LOAD
            out.append(f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2.2" fill="{col}"/>')
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
