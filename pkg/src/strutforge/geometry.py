"""Planar primitives: vectors, affine plane functions, convex polygons, segments.

Points and vectors are plain numpy arrays of shape ``(2,)`` (or ``(n, 2)`` for
lists).  All sign tests use a tolerance proportional to the bounding-box
diagonal of the data involved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .kernels import clip_halfplane

GEOM_TOL = 1e-9


class GeometryError(ValueError):
    """Invalid or degenerate geometric input."""


def as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1 and arr.size == 2:
        arr = arr.reshape(1, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise GeometryError(f"expected a list of 2D points, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise GeometryError("non-finite coordinate")
    return arr


def rot90(v) -> np.ndarray:
    """Rotate by +90 degrees: ``(x, y) -> (-y, x)``. Works on stacked vectors."""
    v = np.asarray(v, dtype=float)
    return np.stack((-v[..., 1], v[..., 0]), axis=-1)


def cross2(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def bbox_diagonal(points) -> float:
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    return float(np.hypot(*(pts.max(axis=0) - pts.min(axis=0))))


def scale_tol(points, rel: float = GEOM_TOL) -> float:
    """Absolute length tolerance for a point cloud."""
    diag = bbox_diagonal(points)
    return rel * diag if diag > 0 else rel


@dataclass(frozen=True)
class PlaneFunc:
    """Affine function ``L(x) = v . x + c`` on the plane."""

    vx: float
    vy: float
    c: float

    def __post_init__(self):
        for name in ("vx", "vy", "c"):
            object.__setattr__(self, name, float(getattr(self, name)))
        if not all(math.isfinite(t) for t in (self.vx, self.vy, self.c)):
            raise GeometryError("non-finite plane coefficients")

    @classmethod
    def from_grad(cls, grad, c: float) -> "PlaneFunc":
        return cls(float(grad[0]), float(grad[1]), float(c))

    @classmethod
    def through(cls, pts, heights) -> "PlaneFunc":
        """Plane interpolating three lifted points ``(pts[k], heights[k])``."""
        pts = as_points(pts)
        A = np.column_stack((pts, np.ones(3)))
        try:
            sol = np.linalg.solve(A, np.asarray(heights, dtype=float))
        except np.linalg.LinAlgError as exc:
            raise GeometryError("collinear points do not define a plane") from exc
        return cls(*map(float, sol))

    @property
    def grad(self) -> np.ndarray:
        return np.array([self.vx, self.vy])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] * self.vx + x[..., 1] * self.vy + self.c

    def __add__(self, other: "PlaneFunc") -> "PlaneFunc":
        return PlaneFunc(self.vx + other.vx, self.vy + other.vy, self.c + other.c)

    def __sub__(self, other: "PlaneFunc") -> "PlaneFunc":
        return PlaneFunc(self.vx - other.vx, self.vy - other.vy, self.c - other.c)

    def __mul__(self, s: float) -> "PlaneFunc":
        return PlaneFunc(self.vx * s, self.vy * s, self.c * s)

    __rmul__ = __mul__

    def shifted(self, dc: float) -> "PlaneFunc":
        return PlaneFunc(self.vx, self.vy, self.c + dc)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.vx, self.vy, self.c)

    def to_dict(self) -> dict:
        return {"v": [self.vx, self.vy], "c": self.c}


ZERO_PLANE = PlaneFunc(0.0, 0.0, 0.0)


def plane_arrays(planes: Sequence[PlaneFunc]) -> tuple[np.ndarray, np.ndarray]:
    """Stack planes into a gradient array ``(m, 2)`` and an offset array ``(m,)``."""
    if len(planes) == 0:
        return np.zeros((0, 2)), np.zeros(0)
    arr = np.array([p.as_tuple() for p in planes], dtype=float)
    return arr[:, :2].copy(), arr[:, 2].copy()


def turning_signs(points, tol: float | None = None) -> np.ndarray:
    """Sign (+1, 0, -1) of the turn at each vertex of a closed polyline."""
    pts = as_points(points)
    if tol is None:
        tol = scale_tol(pts)
    e1 = np.roll(pts, -1, axis=0) - pts
    e2 = np.roll(pts, -2, axis=0) - np.roll(pts, -1, axis=0)
    cr = cross2(e1, e2)
    # cross product has length^2 units
    lens = np.hypot(*e1.T) * np.hypot(*e2.T)
    thr = tol * np.maximum(np.hypot(*e1.T), np.hypot(*e2.T))
    sign = np.where(cr > thr, 1, np.where(cr < -thr, -1, 0))
    sign[lens == 0] = 0
    return sign


def _total_turning(pts: np.ndarray) -> float:
    e = np.roll(pts, -1, axis=0) - pts
    ang = np.arctan2(e[:, 1], e[:, 0])
    d = np.diff(np.append(ang, ang[0]))
    d = (d + np.pi) % (2 * np.pi) - np.pi
    return float(d.sum())


def is_ccw_convex(points, tol: float | None = None) -> bool:
    """True for a strictly convex, counter-clockwise closed polygon."""
    pts = as_points(points)
    if len(pts) < 3:
        raise GeometryError("need at least 3 points")
    if tol is None:
        tol = scale_tol(pts)
    if np.any(np.hypot(*(np.roll(pts, -1, axis=0) - pts).T) <= tol):
        return False
    if not np.all(turning_signs(pts, tol) > 0):
        return False
    return abs(_total_turning(pts) - 2 * np.pi) < 1e-6


def convex_orientation(points, tol: float | None = None) -> int:
    """+1 (CCW) or -1 (CW) for a weakly convex polygon, 0 if not convex.

    Collinear vertices are allowed; repeated vertices are not.
    """
    pts = as_points(points)
    if len(pts) < 3:
        raise GeometryError("need at least 3 points")
    if tol is None:
        tol = scale_tol(pts)
    if np.any(np.hypot(*(np.roll(pts, -1, axis=0) - pts).T) <= tol):
        return 0
    s = turning_signs(pts, tol)
    turn = _total_turning(pts)
    if np.all(s >= 0) and np.any(s > 0) and abs(turn - 2 * np.pi) < 1e-6:
        return 1
    if np.all(s <= 0) and np.any(s < 0) and abs(turn + 2 * np.pi) < 1e-6:
        return -1
    return 0


def convex_hull(points) -> "ConvexPolygon":
    """Counter-clockwise hull (Andrew's monotone chain); collinear points dropped."""
    pts = as_points(points)
    tol = scale_tol(pts)
    uniq = sorted(set(map(tuple, pts.tolist())))
    if len(uniq) < 3:
        raise GeometryError("degenerate hull: fewer than 3 distinct points")

    def half(seq):
        out: list = []
        for p in seq:
            while len(out) >= 2:
                a, b = np.array(out[-2]), np.array(out[-1])
                # exact turn test here; near-collinear vertices go in clean_ring,
                # a tolerance at this point can pop a true extreme point
                if cross2(b - a, np.array(p) - b) <= 0:
                    out.pop()
                else:
                    break
            out.append(p)
        return out

    lower = half(uniq)
    upper = half(reversed(uniq))
    hull = clean_ring(np.array(lower[:-1] + upper[:-1], float), tol)
    if len(hull) < 3:
        raise GeometryError("degenerate hull: all points collinear")
    return ConvexPolygon(hull)


class ConvexPolygon:
    """Convex polygon with counter-clockwise vertices.

    ``strict=True`` rejects collinear or clockwise input; ``strict=False``
    is used for polygons produced by clipping, which are cleaned instead.
    """

    __slots__ = ("vertices", "_tol")

    def __init__(self, vertices, strict: bool = True):
        pts = as_points(vertices)
        if strict:
            if len(pts) < 3 or not is_ccw_convex(pts):
                raise GeometryError("vertices are not a strictly convex CCW polygon")
        self.vertices = pts
        self._tol = scale_tol(pts)

    @classmethod
    def from_clipped(cls, pts, tol: float) -> "ConvexPolygon | None":
        """Clean a clipped vertex list; None when it has no area."""
        pts = clean_ring(np.asarray(pts, dtype=float), tol)
        if len(pts) < 3 or polygon_area(pts) <= tol * tol:
            return None
        return cls(pts, strict=False)

    def __len__(self) -> int:
        return len(self.vertices)

    def __repr__(self) -> str:
        return f"ConvexPolygon({self.vertices.tolist()!r})"

    @property
    def tol(self) -> float:
        return self._tol

    @property
    def area(self) -> float:
        return polygon_area(self.vertices)

    @property
    def centroid(self) -> np.ndarray:
        return polygon_centroid(self.vertices)

    def edges(self) -> Iterable[tuple[np.ndarray, np.ndarray]]:
        v = self.vertices
        for k in range(len(v)):
            yield v[k], v[(k + 1) % len(v)]

    def halfplanes(self) -> np.ndarray:
        """Rows ``(a, b, c)`` with unit normals: inside iff ``a x + b y + c <= 0``."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        n = np.column_stack((e[:, 1], -e[:, 0]))
        ln = np.hypot(n[:, 0], n[:, 1])
        keep = ln > 0
        n = n[keep] / ln[keep, None]
        c = -np.einsum("ij,ij->i", n, v[keep])
        return np.column_stack((n, c))

    def contains(self, p, strict: bool = False, tol: float | None = None) -> bool:
        return polygon_contains(self, p, strict=strict, tol=tol)

    def clip(self, a: float, b: float, c: float, tol: float | None = None):
        """Intersection with ``a x + b y + c <= 0`` (unit normal expected)."""
        t = self._tol if tol is None else tol
        return ConvexPolygon.from_clipped(clip_halfplane(self.vertices, a, b, c, t), t)

    def translated(self, d) -> "ConvexPolygon":
        return ConvexPolygon(self.vertices + np.asarray(d, float), strict=False)


def clean_ring(pts: np.ndarray, tol: float) -> np.ndarray:
    """Drop repeated and collinear vertices of a closed ring."""
    if len(pts) == 0:
        return pts.reshape(0, 2)
    out = [pts[0]]
    for p in pts[1:]:
        if np.hypot(*(p - out[-1])) > tol:
            out.append(p)
    if len(out) > 1 and np.hypot(*(out[0] - out[-1])) <= tol:
        out.pop()
    changed = True
    while changed and len(out) >= 3:
        changed = False
        for k in range(len(out)):
            a, b, c = out[k - 1], out[k], out[(k + 1) % len(out)]
            base = np.hypot(*(c - a))
            if base == 0 or abs(cross2(b - a, c - a)) <= tol * base:
                del out[k]
                changed = True
                break
    return np.array(out).reshape(-1, 2)


def polygon_area(pts) -> float:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 3:
        return 0.0
    return 0.5 * float(np.sum(cross2(pts, np.roll(pts, -1, axis=0))))


def polygon_centroid(pts) -> np.ndarray:
    pts = np.asarray(pts, dtype=float)
    nxt = np.roll(pts, -1, axis=0)
    cr = cross2(pts, nxt)
    a = cr.sum() / 2
    if abs(a) < 1e-300:
        return pts.mean(axis=0)
    return ((pts + nxt) * cr[:, None]).sum(axis=0) / (6 * a)


def polygon_contains(P: ConvexPolygon, p, strict: bool = False, tol: float | None = None) -> bool:
    """Half-plane test against every edge of a CCW convex polygon."""
    t = P.tol if tol is None else tol
    hp = P.halfplanes()
    p = np.asarray(p, dtype=float)
    vals = hp[:, :2] @ p + hp[:, 2]
    if strict:
        return bool(np.all(vals < -t))
    return bool(np.all(vals <= t))


@dataclass(frozen=True)
class Segment:
    a: tuple[float, float]
    b: tuple[float, float]

    def __post_init__(self):
        a = np.asarray(self.a, float)
        b = np.asarray(self.b, float)
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise GeometryError("non-finite segment")
        if np.hypot(*(a - b)) <= scale_tol(np.vstack((a, b))) or np.all(a == b):
            raise GeometryError("degenerate segment")
        object.__setattr__(self, "a", (float(a[0]), float(a[1])))
        object.__setattr__(self, "b", (float(b[0]), float(b[1])))

    @property
    def length(self) -> float:
        return float(math.dist(self.a, self.b))

    def points(self, count: int) -> np.ndarray:
        t = np.linspace(0.0, 1.0, count)[:, None]
        return (1 - t) * np.asarray(self.a) + t * np.asarray(self.b)


def _clip_param(p0, p1, hp, shrink: float):
    """Cyrus-Beck parameter interval of segment p0->p1 inside the polygon."""
    d = p1 - p0
    t0, t1 = 0.0, 1.0
    for a, b, c in hp:
        num = a * p0[0] + b * p0[1] + c + shrink
        den = a * d[0] + b * d[1]
        if den == 0.0:
            if num > 0:
                return None
            continue
        t = -num / den
        if den > 0:
            t1 = min(t1, t)
        else:
            t0 = max(t0, t)
        if t0 > t1:
            return None
    return t0, t1


def segment_intersects_polygon(s: Segment, P: ConvexPolygon, tol: float | None = None) -> bool:
    """Closed segment meets the closed polygon."""
    t = P.tol if tol is None else tol
    p0, p1 = np.asarray(s.a), np.asarray(s.b)
    return _clip_param(p0, p1, P.halfplanes(), -t) is not None


def segment_crosses_interior(a, b, P: ConvexPolygon, tol: float | None = None) -> bool:
    """Open segment ``a-b`` meets the interior of ``P`` (deeper than ``tol``)."""
    t = P.tol if tol is None else tol
    p0, p1 = np.asarray(a, float), np.asarray(b, float)
    length = np.hypot(*(p1 - p0))
    if length == 0:
        return polygon_contains(P, p0, strict=True, tol=t)
    iv = _clip_param(p0, p1, P.halfplanes(), t)
    if iv is None:
        return False
    return (iv[1] - iv[0]) * length > t


def segments_cross(p, q, r, s, tol: float) -> np.ndarray | None:
    """Proper intersection point of segments p-q and r-s away from endpoints."""
    p, q, r, s = (np.asarray(v, float) for v in (p, q, r, s))
    d1 = q - p
    d2 = s - r
    den = cross2(d1, d2)
    l1 = np.hypot(*d1)
    l2 = np.hypot(*d2)
    if abs(den) <= tol * max(l1, l2):
        return None
    t = cross2(r - p, d2) / den
    u = cross2(r - p, d1) / den
    et = tol / l1
    eu = tol / l2
    if et < t < 1 - et and eu < u < 1 - eu:
        return p + t * d1
    return None


def point_segment_distance(p, a, b) -> float:
    p, a, b = (np.asarray(v, float) for v in (p, a, b))
    d = b - a
    L2 = d @ d
    if L2 == 0:
        return float(np.hypot(*(p - a)))
    t = min(1.0, max(0.0, (p - a) @ d / L2))
    return float(np.hypot(*(p - a - t * d)))
