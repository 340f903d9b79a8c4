"""Loop reduction on general planar strut nets.

A convex elementary loop (a bounded face with no struts inside) that holds
no obstacle can be cut out and replaced by the open net of the forces its
vertices receive from the rest of the structure.  Each replacement removes
exactly one loop and leaves every node in equilibrium.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .envelope import StrutNet, extract_net, open_envelope
from .equilibrium import ForceSystem, check_compressibility
from .geometry import (
    GeometryError,
    convex_hull,
    cross2,
    point_segment_distance,
    polygon_area,
    polygon_contains,
    scale_tol,
    segments_cross,
)
from .lpsolve import LinProgram, solve_min
from .synthesis import Obstacle

log = logging.getLogger(__name__)


class ReplacementError(ValueError):
    """A loop does not satisfy the conditions for replacement."""


@dataclass
class GeneralNet(StrutNet):
    obstacles: list = field(default_factory=list)
    bal_tol: float = 1e-6

    @classmethod
    def from_strut_net(cls, net: StrutNet, obstacles=(), bal_tol: float = 1e-6) -> "GeneralNet":
        return cls(net.nodes.copy(), net.edges.copy(), net.forces.copy(), net.applied.copy(),
                   tol=net.tol, obstacles=list(obstacles), bal_tol=bal_tol)

    def copy(self) -> "GeneralNet":
        return GeneralNet(self.nodes.copy(), self.edges.copy(), self.forces.copy(), self.applied.copy(),
                          tol=self.tol, obstacles=list(self.obstacles), bal_tol=self.bal_tol)

    @property
    def geom_tol(self) -> float:
        return self.tol if self.tol > 0 else scale_tol(self.nodes)

    def balanced(self) -> bool:
        return self.max_residual() <= self.bal_tol * self.force_scale()


@dataclass
class LoopInfo:
    cycle: tuple[int, ...]
    edges: tuple[int, ...]
    polygon: np.ndarray
    net_forces: np.ndarray
    convex: bool
    contains_obstacle: bool
    simple: bool = True
    encloses_nodes: bool = False

    @property
    def area(self) -> float:
        return polygon_area(self.polygon)

    @property
    def qualifies(self) -> bool:
        return self.convex and self.simple and not self.contains_obstacle and not self.encloses_nodes


# ---------------------------------------------------------------------------
# construction helpers


def listing_orientation(points) -> int:
    """+1 if the hull vertices appear counter-clockwise in the given order, else -1.

    Forces are read with the same convention as ``ForceSystem``: a clockwise
    listing flips their sign.
    """
    X = np.asarray(points, float)
    hull = convex_hull(X)
    idx = [int(np.argmin(np.hypot(*(X - v).T))) for v in hull.vertices]
    ring = X[sorted(idx)]
    return 1 if polygon_area(ring) > 0 else -1


def complete_net(points, forces, bal_tol: float = 1e-6, orientation: int | None = None) -> GeneralNet:
    """Struts between every pair of points, forces chosen by two LPs.

    First the smallest strut force is maximized with every nodal residual
    component inside ``bal_tol/2`` times the largest load; then, holding half
    of that minimum, the summed absolute residual is minimized.
    """
    X = np.asarray(points, float)
    sgn = listing_orientation(X) if orientation is None else orientation
    f = sgn * np.asarray(forces, float)
    n = len(X)
    pairs = list(itertools.combinations(range(n), 2))
    m = len(pairs)
    fmax = float(np.hypot(*f.T).max())
    band = 0.5 * bal_tol * fmax
    U = np.zeros((n, 2, m))
    for e, (a, b) in enumerate(pairs):
        d = X[a] - X[b]
        u = d / np.hypot(*d)
        U[a, :, e] += u
        U[b, :, e] -= u
    # variables: F (m), t = min force, r (2n) residual magnitudes
    nv = m + 1 + 2 * n
    lp = LinProgram(nv)
    for e in range(m):
        lp.set_bounds(e, 0.0, 1e3 * fmax)
        row = np.zeros(nv)
        row[m] = 1.0
        row[e] = -1.0
        lp.add_le(row, 0.0)
    for k in range(2 * n):
        lp.set_bounds(m + 1 + k, 0.0, band)
    for i in range(n):
        for c in range(2):
            row = np.zeros(nv)
            row[:m] = U[i, c]
            row[m + 1 + 2 * i + c] = -1.0
            lp.add_le(row, -f[i, c])
            row2 = -row
            row2[m + 1 + 2 * i + c] = -1.0
            lp.add_le(row2, f[i, c])
    obj = np.zeros(nv)
    obj[m] = -1.0
    lp.set_objective(obj)
    first = solve_min(lp)
    if not first.feasible:
        raise GeometryError("no compressive pairwise net balances these forces")
    tstar = float(first.x[m])
    lp.set_bounds(m, 0.5 * tstar, None)
    obj = np.zeros(nv)
    obj[m + 1:] = 1.0
    lp.set_objective(obj)
    out = solve_min(lp)
    x = out.x if out.feasible else first.x
    F = x[:m]
    keep = F > 1e-12 * max(fmax, 1.0)
    edges = np.array(pairs, int)[keep]
    return GeneralNet(X.copy(), edges, F[keep], f.copy(), bal_tol=bal_tol)


def planarize(net: GeneralNet) -> GeneralNet:
    """Insert nodes where struts cross or where a node lies inside a strut."""
    tol = net.geom_tol
    nodes = [p for p in net.nodes]
    applied = [a for a in net.applied]
    splits: list[list[tuple[float, int]]] = [[] for _ in range(len(net.edges))]

    def node_at(p):
        for k, q in enumerate(nodes):
            if np.hypot(*(q - p)) <= tol:
                return k
        nodes.append(np.asarray(p, float))
        applied.append(np.zeros(2))
        return len(nodes) - 1

    E = net.edges
    for e1, e2 in itertools.combinations(range(len(E)), 2):
        a, b = E[e1]
        c, d = E[e2]
        if len({a, b, c, d}) < 4:
            continue
        p = segments_cross(net.nodes[a], net.nodes[b], net.nodes[c], net.nodes[d], tol)
        if p is None:
            continue
        k = node_at(p)
        for e, (s, t) in ((e1, (a, b)), (e2, (c, d))):
            pa, pb = net.nodes[s], net.nodes[t]
            splits[e].append((float(np.hypot(*(p - pa)) / np.hypot(*(pb - pa))), k))
    allnodes = np.asarray(nodes)
    for e, (a, b) in enumerate(E):
        pa, pb = net.nodes[a], net.nodes[b]
        ln = np.hypot(*(pb - pa))
        for k, q in enumerate(allnodes):
            if k in (a, b) or any(k == s for _, s in splits[e]):
                continue
            if point_segment_distance(q, pa, pb) <= tol:
                t = float((q - pa) @ (pb - pa) / ln**2)
                if tol / ln < t < 1 - tol / ln:
                    splits[e].append((t, k))
    new_edges, new_forces = [], []
    for e, (a, b) in enumerate(E):
        chain = [a] + [k for _, k in sorted(splits[e])] + [b]
        for s, t in zip(chain, chain[1:]):
            if s != t:
                new_edges.append((s, t))
                new_forces.append(net.forces[e])
    out = GeneralNet(np.asarray(nodes), np.asarray(new_edges, int).reshape(-1, 2), new_forces,
                     np.asarray(applied), tol=net.tol, obstacles=list(net.obstacles), bal_tol=net.bal_tol)
    return _merge_parallel(out)


def _merge_parallel(net: GeneralNet) -> GeneralNet:
    """Combine struts joining the same pair of nodes (forces add)."""
    acc: dict[tuple[int, int], float] = {}
    for (a, b), F in zip(net.edges, net.forces):
        if a == b:
            continue
        key = (int(min(a, b)), int(max(a, b)))
        acc[key] = acc.get(key, 0.0) + float(F)
    keys = sorted(acc)
    net.edges = np.asarray(keys, int).reshape(-1, 2)
    net.forces = np.asarray([acc[k] for k in keys], float)
    return net


def is_planar_embedding(net: StrutNet, tol: float | None = None) -> bool:
    t = scale_tol(net.nodes) if tol is None else tol
    E = net.edges
    for e1, e2 in itertools.combinations(range(len(E)), 2):
        a, b = E[e1]
        c, d = E[e2]
        if len({a, b, c, d}) < 4:
            continue
        if segments_cross(net.nodes[a], net.nodes[b], net.nodes[c], net.nodes[d], t) is not None:
            return False
    return True


# ---------------------------------------------------------------------------
# faces


def _faces(net: StrutNet) -> list[tuple[list[int], list[int]]]:
    """Trace faces of the planar embedding; returns (node cycle, edge ids) per face."""
    X = net.nodes
    adj: dict[int, list[tuple[float, int, int]]] = {}
    for e, (a, b) in enumerate(net.edges):
        a, b = int(a), int(b)
        adj.setdefault(a, []).append((float(np.arctan2(*(X[b] - X[a])[::-1])), b, e))
        adj.setdefault(b, []).append((float(np.arctan2(*(X[a] - X[b])[::-1])), a, e))
    order = {v: sorted(lst) for v, lst in adj.items()}
    pos = {v: {w: k for k, (_, w, _) in enumerate(lst)} for v, lst in order.items()}
    seen: set[tuple[int, int]] = set()
    faces = []
    for v in sorted(order):
        for _, w, _ in order[v]:
            if (v, w) in seen:
                continue
            cyc, eds = [], []
            u, x = v, w
            while (u, x) not in seen:
                seen.add((u, x))
                cyc.append(u)
                lst = order[x]
                k = pos[x][u]
                # next edge clockwise from the reverse edge keeps the face on the left
                _, y, _ = lst[(k - 1) % len(lst)]
                eds.append(_edge_id(order[u], x))
                u, x = x, y
            faces.append((cyc, eds))
    return faces


def _edge_id(lst, target) -> int:
    for _, z, e in lst:
        if z == target:
            return e
    raise KeyError(target)


def _is_convex_ccw(P: np.ndarray, tol: float) -> bool:
    k = len(P)
    if k < 3:
        return False
    for i in range(k):
        a, b, c = P[i - 1], P[i], P[(i + 1) % k]
        cr = cross2(b - a, c - b)
        if cr < -tol * max(np.hypot(*(b - a)), np.hypot(*(c - b))):
            return False
    return True


def _polygons_meet(P: np.ndarray, Q: np.ndarray, tol: float) -> bool:
    """Closed polygons intersect (P arbitrary simple, Q convex)."""
    from .geometry import ConvexPolygon

    Qp = ConvexPolygon(Q, strict=False)
    if any(polygon_contains(Qp, p, tol=tol) for p in P):
        return True
    if _point_in_simple(Q[0], P, tol):
        return True
    for i in range(len(P)):
        a, b = P[i], P[(i + 1) % len(P)]
        for j in range(len(Q)):
            c, d = Q[j], Q[(j + 1) % len(Q)]
            if _segments_touch(a, b, c, d, tol):
                return True
    return False


def _segments_touch(a, b, c, d, tol) -> bool:
    if min(
        point_segment_distance(a, c, d),
        point_segment_distance(b, c, d),
        point_segment_distance(c, a, b),
        point_segment_distance(d, a, b),
    ) <= tol:
        return True
    d1, d2 = b - a, d - c
    den = cross2(d1, d2)
    if den == 0:
        return False
    t = cross2(c - a, d2) / den
    u = cross2(c - a, d1) / den
    return 0 <= t <= 1 and 0 <= u <= 1


def _point_in_simple(p, P: np.ndarray, tol: float) -> bool:
    inside = False
    k = len(P)
    for i in range(k):
        a, b = P[i], P[(i + 1) % k]
        if point_segment_distance(p, a, b) <= tol:
            return True
        if (a[1] > p[1]) != (b[1] > p[1]):
            x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1])
            if x > p[0]:
                inside = not inside
    return inside


def find_elementary_loops(net: GeneralNet) -> list[LoopInfo]:
    """Bounded faces of the planar net with their vertex net forces."""
    tol = net.geom_tol
    if not is_planar_embedding(net, tol):
        raise GeometryError("strut net is not planar; call planarize first")
    X = net.nodes
    loops = []
    for cyc, eds in _faces(net):
        P = X[cyc]
        if len(cyc) < 3 or polygon_area(P) <= tol * tol:
            continue
        simple = len(set(cyc)) == len(cyc)
        in_loop = set(eds)
        nf = np.zeros((len(cyc), 2))
        for k, v in enumerate(cyc):
            tot = net.applied[v].copy()
            for e, (a, b) in enumerate(net.edges):
                if e in in_loop or v not in (a, b):
                    continue
                w = b if a == v else a
                d = X[v] - X[w]
                tot += net.forces[e] * d / np.hypot(*d)
            nf[k] = tot
        others = [i for i in range(len(X)) if i not in set(cyc)]
        encloses = any(_point_in_simple(X[i], P, -1.0) and _strictly_inside(X[i], P, tol) for i in others)
        contains = any(_polygons_meet(P, o.vertices, tol) for o in net.obstacles)
        # force-free vertices are straight up to the balance tolerance
        bearing = np.hypot(*nf.T) > net.bal_tol * net.force_scale()
        convex = simple and bearing.sum() >= 3 and _is_convex_ccw(P[bearing], tol)
        loops.append(LoopInfo(tuple(cyc), tuple(eds), P.copy(), nf, convex, contains, simple, encloses))
    return loops


def _strictly_inside(p, P: np.ndarray, tol: float) -> bool:
    if any(point_segment_distance(p, P[i], P[(i + 1) % len(P)]) <= tol for i in range(len(P))):
        return False
    return _point_in_simple(p, P, 0.0)


# ---------------------------------------------------------------------------
# replacement


def replace_loop(net: GeneralNet, loop: LoopInfo) -> GeneralNet:
    """Swap a qualifying loop for the open net of its vertex forces."""
    if not loop.simple:
        raise ReplacementError("face boundary is not a simple cycle")
    if not loop.convex:
        raise ReplacementError("loop is not convex")
    if loop.contains_obstacle:
        raise ReplacementError("loop meets an obstacle")
    if loop.encloses_nodes:
        raise ReplacementError("loop has struts or nodes inside")
    keep = _load_bearing(loop, net)
    pts = loop.polygon[keep]
    sub = ForceSystem(pts, balance_exactly(pts, loop.net_forces[keep]), bal_tol=net.bal_tol)
    if not check_compressibility(sub):
        raise ReplacementError("vertex forces of the loop are not compression-supportable")
    env = open_envelope(sub)
    subnet = extract_net(env, sub)
    before = net.loop_count()
    tol = net.geom_tol
    nodes = [p for p in net.nodes]
    applied = [a for a in net.applied]
    drop = set(loop.edges)
    edges = [tuple(e) for k, e in enumerate(net.edges) if k not in drop]
    forces = [float(F) for k, F in enumerate(net.forces) if k not in drop]
    remap = {}
    for j, p in enumerate(subnet.nodes):
        hit = None
        for v in loop.cycle:
            if np.hypot(*(net.nodes[v] - p)) <= 10 * tol:
                hit = v
                break
        if hit is None:
            for k, q in enumerate(nodes):
                if np.hypot(*(q - p)) <= tol:
                    hit = k
                    break
        if hit is None:
            nodes.append(p.copy())
            applied.append(np.zeros(2))
            hit = len(nodes) - 1
        remap[j] = hit
    for (a, b), F in zip(subnet.edges, subnet.forces):
        edges.append((remap[int(a)], remap[int(b)]))
        forces.append(float(F))
    out = GeneralNet(np.asarray(nodes), np.asarray(edges, int).reshape(-1, 2), forces, np.asarray(applied),
                     tol=net.tol, obstacles=list(net.obstacles), bal_tol=net.bal_tol)
    out = _drop_unused(planarize(out))
    after = out.loop_count()
    if after != before - 1:
        raise ReplacementError(f"replacement changed the loop count from {before} to {after}")
    return out


def balance_exactly(points, forces) -> np.ndarray:
    """Smallest change to ``forces`` giving zero net force and zero torque."""
    X = np.asarray(points, float)
    f = np.asarray(forces, float)
    k = len(X)
    A = np.zeros((3, 2 * k))
    A[0, 0::2] = 1.0
    A[1, 1::2] = 1.0
    A[2, 0::2] = -X[:, 1]
    A[2, 1::2] = X[:, 0]
    v = f.reshape(-1)
    corr = A.T @ np.linalg.lstsq(A @ A.T, A @ v, rcond=None)[0]
    return (v - corr).reshape(k, 2)


def _load_bearing(loop: LoopInfo, net: GeneralNet) -> np.ndarray:
    """Loop vertices to keep in the sub-problem.

    A vertex without net force would only repeat its neighbour's tangent
    plane; it is left out and keeps whatever external struts it has.
    """
    ftol = net.bal_tol * net.force_scale()
    return np.hypot(*loop.net_forces.T) > ftol


def _drop_unused(net: GeneralNet) -> GeneralNet:
    used = np.zeros(len(net.nodes), bool)
    used[net.edges.reshape(-1)] = True
    used |= np.hypot(*net.applied.T) > 0
    if used.all():
        return net
    remap = -np.ones(len(used), int)
    remap[used] = np.arange(used.sum())
    return GeneralNet(net.nodes[used], remap[net.edges], net.forces, net.applied[used],
                      tol=net.tol, obstacles=list(net.obstacles), bal_tol=net.bal_tol)


# ---------------------------------------------------------------------------
# driver


def loop_bound(net: GeneralNet) -> tuple[int, int, int]:
    """``(q, p, p0)``: loaded nodes strictly inside the hull of the loaded
    nodes, obstacles, and obstacles meeting the hull boundary."""
    loaded = np.flatnonzero(np.hypot(*net.applied.T) > 0)
    P = net.nodes[loaded]
    hull = convex_hull(P)
    t = hull.tol
    q = sum(1 for p in P if polygon_contains(hull, p, strict=True, tol=t))
    p = len(net.obstacles)
    p0 = 0
    H = hull.vertices
    for o in net.obstacles:
        V = o.vertices
        inside = [polygon_contains(hull, v, tol=t) for v in V]
        on_edge = any(point_segment_distance(v, H[i], H[(i + 1) % len(H)]) <= t for v in V for i in range(len(H)))
        if on_edge or (any(inside) and not all(inside)):
            p0 += 1
    return q, p, p0


@dataclass
class ReductionTrace:
    net: GeneralNet
    steps: list[GeneralNet] = field(default_factory=list)
    replaced: list[LoopInfo] = field(default_factory=list)

    @property
    def loops(self) -> int:
        return len(find_elementary_loops(self.net))


def reduce(net: GeneralNet, on_step: Callable[[int, GeneralNet], None] | None = None) -> ReductionTrace:
    """Replace qualifying loops, smallest area first, until none is left."""
    cur = net.copy()
    trace = ReductionTrace(cur, [cur])
    if on_step:
        on_step(0, cur)
    for step in range(1, 10_000):
        loops = [lp for lp in find_elementary_loops(cur) if lp.qualifies]
        loops.sort(key=lambda lp: (lp.area, lp.cycle))
        nxt = None
        for lp in loops:
            try:
                nxt = replace_loop(cur, lp)
            except ReplacementError as exc:
                log.debug("loop %s kept: %s", lp.cycle, exc)
                continue
            trace.replaced.append(lp)
            break
        if nxt is None:
            break
        cur = nxt
        trace.steps.append(cur)
        if on_step:
            on_step(step, cur)
    trace.net = cur
    return trace
