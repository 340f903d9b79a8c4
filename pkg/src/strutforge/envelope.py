"""Concave piecewise-linear functions as minima of planes, and their strut nets.

A crease between two cells with planes ``A`` and ``B`` carries a compressive
strut of force ``|grad A - grad B|``.  When an envelope knows the exterior
plane of each boundary segment (the tangent plane of that edge), creases
along the boundary are reported as struts too.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .equilibrium import BAL_TOL, ConsistencyError, ForceSystem, tangent_planes
from .geometry import (
    ConvexPolygon,
    GeometryError,
    PlaneFunc,
    bbox_diagonal,
    convex_hull,
    cross2,
    plane_arrays,
    scale_tol,
)
from .kernels import envelope_cell

PRUNE_TOL = 1e-8


class EmptyRegionError(GeometryError):
    """Requested region has no area."""


@dataclass(frozen=True)
class BoundarySegment:
    a: np.ndarray
    b: np.ndarray
    plane: PlaneFunc


@dataclass
class ConcaveEnvelope:
    planes: tuple[PlaneFunc, ...]
    domain: ConvexPolygon
    cells: list[tuple[int, ConvexPolygon]]
    boundary: tuple[BoundarySegment, ...] = ()
    tol: float = 0.0

    def __call__(self, x):
        W, D = plane_arrays(self.planes)
        x = np.asarray(x, float)
        return (x.reshape(-1, 2) @ W.T + D).min(axis=1).reshape(x.shape[:-1])

    @property
    def facet_count(self) -> int:
        return len(self.cells)

    def cell_of(self, index: int) -> ConvexPolygon | None:
        for k, poly in self.cells:
            if k == index:
                return poly
        return None


def _value_scale(W: np.ndarray, D: np.ndarray, verts: np.ndarray) -> float:
    if len(W) == 0:
        return 1.0
    V = verts @ W.T + D
    s = float(np.abs(V).max())
    return s if s > 0 else 1.0


def _dedupe(W: np.ndarray, D: np.ndarray, verts: np.ndarray, vtol: float) -> list[int]:
    """Indices of planes kept after dropping later duplicates (equal on the domain)."""
    V = verts @ W.T + D
    keep: list[int] = []
    for i in range(len(W)):
        dup = False
        for k in keep:
            if np.all(np.abs(V[:, i] - V[:, k]) <= vtol):
                dup = True
                break
        if not dup:
            keep.append(i)
    return keep


def min_envelope(
    planes: Sequence[PlaneFunc],
    domain: ConvexPolygon,
    boundary: Sequence[BoundarySegment] = (),
    tol: float | None = None,
) -> ConcaveEnvelope:
    """Cell of plane ``i`` = domain where ``L_i`` is the minimum.

    Duplicated planes keep the lowest index; cells without area are dropped.
    """
    if domain is None or len(domain) < 3 or domain.area <= 0:
        raise GeometryError("empty domain")
    planes = tuple(planes)
    if not planes:
        raise GeometryError("need at least one plane")
    verts = domain.vertices
    t = scale_tol(verts) if tol is None else tol
    W, D = plane_arrays(planes)
    vtol = 1e-12 * _value_scale(W, D, verts) + 1e-300
    keep = _dedupe(W, D, verts, vtol)
    Wk, Dk = W[keep], D[keep]
    cells = []
    for local, idx in enumerate(keep):
        raw = envelope_cell(Wk, Dk, local, verts, t)
        if len(raw) < 3:
            continue
        poly = ConvexPolygon.from_clipped(raw, t)
        if poly is not None:
            cells.append((idx, poly))
    return ConcaveEnvelope(planes, domain, cells, tuple(boundary), t)


def open_envelope(fs: ForceSystem) -> ConcaveEnvelope:
    """Minimum of the tangent planes of a fully given force system."""
    tp = tangent_planes(fs)
    domain = convex_hull(fs.points)
    return min_envelope(tp.planes, domain, boundary_segments(fs.points, tp.planes))


def boundary_segments(points, planes: Sequence[PlaneFunc]) -> tuple[BoundarySegment, ...]:
    """Edge ``k`` runs from point ``k-1`` to point ``k`` and carries plane ``k``."""
    pts = np.asarray(points, float)
    n = len(pts)
    return tuple(BoundarySegment(pts[k - 1], pts[k], planes[k]) for k in range(n))


def cleave(env: ConcaveEnvelope, planes: Sequence[PlaneFunc]) -> ConcaveEnvelope:
    """Envelope with extra planes added; pointwise never above the input."""
    return min_envelope(tuple(env.planes) + tuple(planes), env.domain, env.boundary, env.tol)


def gamma_region(env: ConcaveEnvelope, L: PlaneFunc) -> ConvexPolygon:
    """Convex set of the domain where ``L`` does not exceed the envelope."""
    W, D = plane_arrays(tuple(env.planes) + (L,))
    raw = envelope_cell(W, D, len(W) - 1, env.domain.vertices, env.tol)
    poly = ConvexPolygon.from_clipped(raw, env.tol) if len(raw) >= 3 else None
    if poly is None:
        raise EmptyRegionError("plane lies above the envelope everywhere on the domain")
    return poly


# ---------------------------------------------------------------------------
# strut nets


@dataclass
class StrutNet:
    """Nodes, compressive struts ``(a, b)`` with forces, and nodal loads.

    A strut of force ``F >= 0`` pushes its end nodes apart.
    """

    nodes: np.ndarray
    edges: np.ndarray
    forces: np.ndarray
    applied: np.ndarray
    tol: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, float).reshape(-1, 2)
        self.edges = np.asarray(self.edges, int).reshape(-1, 2)
        self.forces = np.asarray(self.forces, float).reshape(-1)
        self.applied = np.asarray(self.applied, float).reshape(-1, 2)
        if len(self.applied) != len(self.nodes):
            raise ValueError("applied loads must be given per node")

    @property
    def n_struts(self) -> int:
        return len(self.edges)

    def lengths(self) -> np.ndarray:
        if not len(self.edges):
            return np.zeros(0)
        d = self.nodes[self.edges[:, 1]] - self.nodes[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    def residuals(self) -> np.ndarray:
        """Per-node load plus strut end forces; zero at equilibrium."""
        res = self.applied.copy()
        if len(self.edges):
            a, b = self.edges[:, 0], self.edges[:, 1]
            d = self.nodes[a] - self.nodes[b]
            ln = np.hypot(d[:, 0], d[:, 1])
            u = d / np.where(ln > 0, ln, 1.0)[:, None]
            f = self.forces[:, None] * u
            np.add.at(res, a, f)
            np.add.at(res, b, -f)
        return res

    def max_residual(self) -> float:
        r = self.residuals()
        return float(np.hypot(r[:, 0], r[:, 1]).max()) if len(r) else 0.0

    def force_scale(self) -> float:
        s = max(
            float(np.abs(self.forces).max()) if len(self.forces) else 0.0,
            float(np.hypot(*self.applied.T).max()) if len(self.applied) else 0.0,
        )
        return s if s > 0 else 1.0

    def loop_count(self) -> int:
        """Bounded faces of the (planar) net: ``E - V + C`` over used nodes."""
        if not len(self.edges):
            return 0
        used = np.unique(self.edges)
        parent = {int(v): int(v) for v in used}

        def find(v):
            while parent[v] != v:
                parent[v] = parent[parent[v]]
                v = parent[v]
            return v

        for a, b in self.edges:
            ra, rb = find(int(a)), find(int(b))
            if ra != rb:
                parent[ra] = rb
        comps = len({find(v) for v in parent})
        return len(self.edges) - len(used) + comps

    def to_dict(self) -> dict:
        return {
            "nodes": self.nodes.tolist(),
            "struts": [
                {"a": int(a), "b": int(b), "force": float(f)}
                for (a, b), f in zip(self.edges, self.forces)
            ],
            "applied": {str(i): self.applied[i].tolist() for i in np.flatnonzero(np.hypot(*self.applied.T) > 0)},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StrutNet":
        nodes = np.asarray(d["nodes"], float).reshape(-1, 2)
        edges = [(s["a"], s["b"]) for s in d["struts"]]
        forces = [s["force"] for s in d["struts"]]
        applied = np.zeros_like(nodes)
        for k, v in d.get("applied", {}).items():
            applied[int(k)] = v
        return cls(nodes, np.asarray(edges, int).reshape(-1, 2), forces, applied)


def total_weight(net: StrutNet) -> float:
    """Sum of force times length over all struts."""
    if not net.n_struts:
        return 0.0
    return float(np.dot(net.forces, net.lengths()))


def boundary_weight(points, planes: Sequence[PlaneFunc], orientation: int = 1) -> float:
    """Total weight from boundary normal derivatives of the edge planes.

    ``-sum_k grad(L_k) . n_k |e_k|`` with ``n_k`` the outward normal of the
    edge from point ``k-1`` to point ``k``.
    """
    pts = np.asarray(points, float)
    e = pts - np.roll(pts, 1, axis=0)
    nl = orientation * np.column_stack((e[:, 1], -e[:, 0]))
    W, _ = plane_arrays(planes)
    return float(-np.einsum("ij,ij->i", W, nl).sum())


def _span_on_line(verts: np.ndarray, origin: np.ndarray, u: np.ndarray, nrm: np.ndarray, tol: float):
    dist = np.abs((verts - origin) @ nrm)
    on = verts[dist <= tol]
    if len(on) < 2:
        return None
    s = (on - origin) @ u
    return float(s.min()), float(s.max())


def _bbox(poly: np.ndarray) -> np.ndarray:
    return np.concatenate((poly.min(axis=0), poly.max(axis=0)))


def _creases(env: ConcaveEnvelope, tol: float) -> list[tuple[np.ndarray, np.ndarray, float]]:
    out = []
    cells = env.cells
    W = np.array([env.planes[k].grad for k, _ in cells]).reshape(-1, 2)
    C = np.array([env.planes[k].c for k, _ in cells])
    boxes = np.array([_bbox(p.vertices) for _, p in cells]).reshape(-1, 4)
    for ia in range(len(cells)):
        pa = cells[ia][1].vertices
        for ib in range(ia + 1, len(cells)):
            ba, bb = boxes[ia], boxes[ib]
            if ba[0] > bb[2] + tol or bb[0] > ba[2] + tol or ba[1] > bb[3] + tol or bb[1] > ba[3] + tol:
                continue
            g = W[ia] - W[ib]
            F = float(np.hypot(*g))
            if F == 0:
                continue
            nrm = g / F
            origin = -(C[ia] - C[ib]) / F * nrm
            u = np.array([-nrm[1], nrm[0]])
            sa = _span_on_line(pa, origin, u, nrm, tol)
            if sa is None:
                continue
            sb = _span_on_line(cells[ib][1].vertices, origin, u, nrm, tol)
            if sb is None:
                continue
            lo, hi = max(sa[0], sb[0]), min(sa[1], sb[1])
            if hi - lo > tol:
                out.append((origin + lo * u, origin + hi * u, F))
    for seg in env.boundary:
        d = seg.b - seg.a
        ln = float(np.hypot(*d))
        if ln == 0:
            continue
        u = d / ln
        nrm = np.array([-u[1], u[0]])
        for (k, poly), g in zip(cells, W):
            jump = g - seg.plane.grad
            F = float(np.hypot(*jump))
            if F == 0:
                continue
            sp = _span_on_line(poly.vertices, seg.a, u, nrm, tol)
            if sp is None:
                continue
            lo, hi = max(sp[0], 0.0), min(sp[1], ln)
            if hi - lo <= tol:
                continue
            p, q = seg.a + lo * u, seg.a + hi * u
            P = env.planes[k]
            vt = 1e-9 * max(1.0, abs(seg.plane(p)), abs(seg.plane(q))) + F * tol
            if abs(P(p) - seg.plane(p)) > vt or abs(P(q) - seg.plane(q)) > vt:
                continue
            out.append((p, q, F))
    return out


def _merge_nodes(
    points: list[np.ndarray], tol: float, anchors: np.ndarray, anchor_tol: float | None = None
) -> tuple[np.ndarray, list[int]]:
    """Cluster points within ``tol``; anchor points (force locations) come first
    and capture anything within ``anchor_tol``."""
    nodes: list[np.ndarray] = [np.asarray(a, float) for a in anchors]
    na = len(nodes)
    atol = tol if anchor_tol is None else max(tol, anchor_tol)
    index = []
    for p in points:
        best = -1
        if na:
            d = np.hypot(*(np.asarray(nodes[:na]) - p).T)
            k = int(np.argmin(d))
            if d[k] <= atol:
                index.append(k)
                continue
        if nodes:
            arr = np.asarray(nodes)
            d = np.hypot(*(arr - p).T)
            k = int(np.argmin(d))
            if d[k] <= tol:
                best = k
        if best < 0:
            nodes.append(np.asarray(p, float))
            best = len(nodes) - 1
        index.append(best)
    return np.asarray(nodes).reshape(-1, 2), index


def _split_at_nodes(nodes: np.ndarray, struts: list[tuple[int, int, float]], tol: float):
    """Split struts at nodes lying strictly inside them."""
    out = []
    for a, b, F in struts:
        pa, pb = nodes[a], nodes[b]
        d = pb - pa
        ln = float(np.hypot(*d))
        u = d / ln
        rel = nodes - pa
        s = rel @ u
        off = np.abs(cross2(np.broadcast_to(u, rel.shape), rel))
        inner = np.flatnonzero((off <= tol) & (s > tol) & (s < ln - tol))
        if inner.size == 0:
            out.append((a, b, F))
            continue
        chain = [a] + [int(k) for k in inner[np.argsort(s[inner])]] + [b]
        out.extend((chain[k], chain[k + 1], F) for k in range(len(chain) - 1))
    return out


def _anchor_radius(fs: ForceSystem) -> float | None:
    """How far the spread closure defect can move an envelope vertex off a force point."""
    if fs.reactive:
        return None
    tp = tangent_planes(fs)
    drift = float(np.abs(PlaneFunc(*tp.closure)(fs.points)).max())
    fmin = float(np.hypot(*fs.loads.T).min())
    if drift == 0 or fmin == 0:
        return None
    return 2.0 * drift / fmin


def extract_net(
    env: ConcaveEnvelope,
    points=None,
    loads=None,
    check: bool = True,
    bal_tol: float = 1e-6,
    prune: float = PRUNE_TOL,
) -> StrutNet:
    """Strut net of the envelope's creases, loaded at ``points`` by ``loads``.

    ``points``/``loads`` may instead be a ForceSystem with all forces known.
    With ``check`` the nodal equilibrium is verified against
    ``bal_tol`` times the force scale.
    """
    anchor_tol = None
    if isinstance(points, ForceSystem):
        fs = points
        points, loads = fs.points, fs.loads
        bal_tol = fs.bal_tol
        anchor_tol = _anchor_radius(fs)
    pts = np.zeros((0, 2)) if points is None else np.asarray(points, float).reshape(-1, 2)
    lds = np.zeros_like(pts) if loads is None else np.asarray(loads, float).reshape(-1, 2)
    tol = env.tol
    raw = _creases(env, tol)
    if raw:
        Fmax = max(F for _, _, F in raw)
        raw = [r for r in raw if r[2] >= prune * Fmax]
    ends = [p for a, b, _ in raw for p in (a, b)]
    merge_tol = 10 * tol
    if len(pts) > 1:
        # solver round-off leaves vertices a hair off the force points
        floor = BAL_TOL * bbox_diagonal(pts)
        anchor_tol = floor if anchor_tol is None else max(anchor_tol, floor)
    nodes, idx = _merge_nodes(ends, merge_tol, pts, anchor_tol)
    struts = []
    seen: dict[tuple[int, int], int] = {}
    for k, (_, _, F) in enumerate(raw):
        a, b = idx[2 * k], idx[2 * k + 1]
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        if key in seen:
            continue
        seen[key] = len(struts)
        struts.append((a, b, F))
    struts = _split_at_nodes(nodes, struts, merge_tol)
    applied = np.zeros_like(nodes)
    applied[: len(pts)] = np.nan_to_num(lds)
    # keep force points and nodes that carry struts
    used = np.zeros(len(nodes), bool)
    for a, b, _ in struts:
        used[a] = used[b] = True
    used[: len(pts)] |= np.hypot(*applied[: len(pts)].T) > 0
    remap = -np.ones(len(nodes), int)
    remap[used] = np.arange(used.sum())
    edges = np.array([(remap[a], remap[b]) for a, b, _ in struts], int).reshape(-1, 2)
    forces = np.array([F for _, _, F in struts])
    net = StrutNet(nodes[used], edges, forces, applied[used], tol=merge_tol)
    net.meta["point_nodes"] = [int(remap[i]) for i in range(len(pts))]
    if check:
        res = net.max_residual()
        if res > bal_tol * net.force_scale():
            raise ConsistencyError(f"node residual {res:.3g} exceeds tolerance")
    return net
