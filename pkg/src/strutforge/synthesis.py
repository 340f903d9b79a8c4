"""Obstacle-avoiding strut nets.

Three programs live here:

* fixed forces, one or several obstacles: find cleaving planes ``(v, c)``
  with ``L >= phi0`` at the force points and ``L <= phi0`` (and below the
  other cleaving planes) on each obstacle's vertices;
* reactive forces: the unknown reactions enter every boundary plane
  linearly, so the planes, the concavity conditions and the obstacle
  conditions become one linear program in the reactions and the cleaving
  planes.  Pairwise conditions are generated lazily.

Results are verified geometrically (equilibrium, compression, struts clear
of obstacle interiors) before they are returned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .envelope import (
    ConcaveEnvelope,
    EmptyRegionError,
    StrutNet,
    boundary_segments,
    extract_net,
    gamma_region,
    min_envelope,
    open_envelope,
    total_weight,
)
from .equilibrium import (
    BAL_TOL,
    ConsistencyError,
    EquilibriumError,
    ForceSystem,
    check_compressibility,
    concavity_margins,
    tangent_planes,
    TangentPlanes,
)
from .geometry import (
    ConvexPolygon,
    GeometryError,
    PlaneFunc,
    Segment,
    as_points,
    bbox_diagonal,
    convex_hull,
    convex_orientation,
    is_ccw_convex,
    plane_arrays,
    point_segment_distance,
    rot90,
    scale_tol,
    segment_crosses_interior,
)
from .lpsolve import LinProgram, LpStatus, SimplexSolver, SolverError, solve_feasibility, solve_min

log = logging.getLogger(__name__)

REACTION_CHARGE = 1e-6
VERTEX_CUTS = 8
POINT_CUTS = 8
CONCAVITY_CUTS = 16


# ---------------------------------------------------------------------------
# obstacles


@dataclass(frozen=True)
class Obstacle:
    polygon: ConvexPolygon
    label: str = ""
    hull_replaced: bool = False

    @property
    def vertices(self) -> np.ndarray:
        return self.polygon.vertices

    @property
    def centroid(self) -> np.ndarray:
        return self.polygon.centroid

    @classmethod
    def from_points(cls, pts, label: str = "") -> "Obstacle":
        """Convex polygon from vertices; non-convex input becomes its hull."""
        pts = as_points(pts)
        if len(pts) >= 3 and is_ccw_convex(pts):
            return cls(ConvexPolygon(pts), label)
        if len(pts) >= 3 and convex_orientation(pts) == -1 and is_ccw_convex(pts[::-1]):
            return cls(ConvexPolygon(pts[::-1]), label)
        hull = convex_hull(pts)
        replaced = len(hull) != len(pts) or not np.allclose(np.sort(hull.vertices, axis=0), np.sort(pts, axis=0))
        if replaced:
            log.warning("obstacle %r is not convex; using its convex hull", label)
        return cls(hull, label, hull_replaced=replaced)


def _circle_polygon(k: int) -> np.ndarray:
    """Unit circle circumscribed by ``k`` tangent edges, tangent at angles ``2 pi j / k``."""
    ang = (2 * np.arange(k) + 1) * np.pi / k
    r = 1.0 / math.cos(math.pi / k)
    return r * np.column_stack((np.cos(ang), np.sin(ang)))


def approximate_shape(
    kind: str,
    sides: int = 20,
    center=(0.0, 0.0),
    radius: float = 1.0,
    semi_axes=(1.0, 1.0),
    angle: float = 0.0,
    vertices=None,
    label: str = "",
) -> Obstacle:
    """Convex polygon containing a circle, ellipse, half-disk or polygon.

    Curved boundaries are circumscribed by tangent edges so the polygon
    always contains the shape.  ``angle`` rotates ellipses and half-disks
    (a half-disk with ``angle=0`` has its flat edge on the bottom).
    """
    if kind != "polygon" and sides < 3:
        raise GeometryError("need at least 3 sides")
    c = np.asarray(center, float)
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    if kind == "polygon":
        if vertices is None:
            raise GeometryError("polygon shape needs vertices")
        return Obstacle.from_points(vertices, label)
    if kind == "circle":
        pts = c + radius * _circle_polygon(sides)
    elif kind == "ellipse":
        a, b = semi_axes
        pts = c + (_circle_polygon(sides) * np.array([a, b])) @ rot.T
    elif kind in ("half-disk", "halfdisk", "half_disk"):
        k = sides - 1
        ang = np.arange(k + 1) * np.pi / k
        r = radius / math.cos(math.pi / (2 * k))
        pts = c + (r * np.column_stack((np.cos(ang), np.sin(ang)))) @ rot.T
    else:
        raise GeometryError(f"unknown shape {kind!r}")
    return Obstacle(ConvexPolygon(pts), label)


# ---------------------------------------------------------------------------
# supports


@dataclass(frozen=True)
class SupportSegment:
    segment: Segment
    count: int

    def __post_init__(self):
        if self.count < 2:
            raise GeometryError("a support segment needs at least 2 points")


def discretize_supports(loads, supports: Sequence[SupportSegment], bal_tol: float = BAL_TOL) -> ForceSystem:
    """Insert uniformly spaced reactive points along each support segment.

    ``loads`` is a ForceSystem or a list of ``(point, force)`` pairs (the
    latter may have fewer than three points).  The merged list is ordered
    around its centroid in the orientation of the input (counter-clockwise
    when it cannot be told) and starts at the first given point.
    """
    if isinstance(loads, ForceSystem):
        items = [(tuple(p), None if i in loads.reactive else tuple(f)) for i, (p, f) in enumerate(zip(loads.points, loads.forces))]
        orient = loads.orientation
        bal_tol = loads.bal_tol
    else:
        items = [(tuple(map(float, p)), None if f is None else tuple(map(float, f))) for p, f in loads]
        orient = 1
        if len(items) >= 3:
            orient = convex_orientation([p for p, _ in items]) or 1
    first = items[0][0] if items else None
    for k, sup in enumerate(supports):
        new = [(tuple(p), None) for p in sup.segment.points(sup.count)]
        trial = items + new
        try:
            ordered = _order_ring(trial, orient, first)
        except GeometryError as exc:
            raise GeometryError(f"support segment {k + 1}: {exc}") from None
        pts = np.array([p for p, _ in ordered])
        if len(pts) >= 3 and convex_orientation(pts) != orient:
            raise GeometryError(f"support segment {k + 1} breaks convexity of the point list")
        items = ordered
    pts = [p for p, _ in items]
    forces = [f for _, f in items]
    reactive = [i for i, f in enumerate(forces) if f is None]
    return ForceSystem(pts, forces, reactive, bal_tol)


def _order_ring(items, orient: int, first):
    pts = np.array([p for p, _ in items], float)
    tol = scale_tol(pts)
    for i in range(len(pts)):
        d = np.hypot(*(pts[i + 1 :] - pts[i]).T) if i + 1 < len(pts) else np.zeros(0)
        if np.any(d <= tol):
            raise GeometryError("coincident points")
    c = pts.mean(axis=0)
    ang = np.arctan2(pts[:, 1] - c[1], pts[:, 0] - c[0])
    order = np.argsort(orient * ang, kind="stable")
    ring = [items[i] for i in order]
    if first is not None:
        k = next(i for i, (p, _) in enumerate(ring) if p == first)
        ring = ring[k:] + ring[:k]
    return ring


# ---------------------------------------------------------------------------
# results


@dataclass
class SynthesisResult:
    status: LpStatus
    force_system: ForceSystem | None = None
    planes: tuple[PlaneFunc, ...] = ()
    cleaving: tuple[PlaneFunc, ...] = ()
    envelope: ConcaveEnvelope | None = None
    net: StrutNet | None = None
    reactive_forces: dict[int, np.ndarray] = field(default_factory=dict)
    objective_value: float | None = None
    gammas: list[ConvexPolygon | None] = field(default_factory=list)
    contact: bool = False
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is LpStatus.FEASIBLE

    def summary(self) -> dict:
        d = {"status": self.status.value, "contact": self.contact}
        if self.net is not None:
            d.update(
                struts=self.net.n_struts,
                loops=self.net.loop_count(),
                weight=total_weight(self.net),
                max_residual=self.net.max_residual(),
            )
        if self.objective_value is not None:
            d["objective"] = self.objective_value
        return d


def _assemble(
    fs: ForceSystem,
    planes: Sequence[PlaneFunc],
    cleaving: Sequence[PlaneFunc],
    obstacles: Sequence[Obstacle],
) -> tuple[ConcaveEnvelope, StrutNet, list, bool]:
    """Envelope, net and checks shared by all programs."""
    domain = convex_hull(fs.points)
    env = min_envelope(tuple(planes) + tuple(cleaving), domain, boundary_segments(fs.points, planes))
    net = extract_net(env, fs.points, fs.loads, bal_tol=fs.bal_tol)
    vtol = fs.value_tol
    if len(net.forces) and net.forces.min() < -fs.bal_tol:
        raise ConsistencyError("tensile strut in a compression-only net")
    gammas = []
    for q, (obs, L) in enumerate(zip(obstacles, cleaving)):
        over = L(obs.vertices) - env(obs.vertices)
        if over.max() > vtol:
            raise ConsistencyError(f"obstacle {q + 1} is not below its cleaving plane region")
        try:
            gammas.append(gamma_region(env, L))
        except EmptyRegionError:
            gammas.append(None)
    contact = False
    gtol = 10 * env.tol
    for obs in obstacles:
        P = obs.polygon
        for a, b in net.edges:
            pa, pb = net.nodes[a], net.nodes[b]
            if segment_crosses_interior(pa, pb, P, gtol):
                # within the LP tolerance the strut only grazes the obstacle
                depth = _penetration(pa, pb, P)
                if depth > scale_tol(fs.points, 1e-6):
                    raise ConsistencyError(f"strut crosses obstacle {obs.label or '?'}")
                contact = True
            elif any(point_segment_distance(y, pa, pb) <= gtol for y in P.vertices):
                contact = True
    return env, net, gammas, contact


def _penetration(a, b, P: ConvexPolygon) -> float:
    """Largest depth of the segment inside ``P`` (distance to the boundary)."""
    hp = P.halfplanes()
    depth = 0.0
    for t in np.linspace(0.0, 1.0, 65):
        x = (1 - t) * a + t * b
        d = -(hp[:, :2] @ x + hp[:, 2]).max()
        depth = max(depth, d)
    return depth


# ---------------------------------------------------------------------------
# fixed forces


def quick_infeasibility(fs: ForceSystem, obs: Obstacle) -> bool:
    """Certified nonexistence without an LP.

    True when a strut of the open net passes through the obstacle's interior
    and the obstacle sticks out of the hull of the force points.
    """
    env = open_envelope(fs)
    net = extract_net(env, fs, check=False)
    hull = env.domain
    outside = any(not hull.contains(y, tol=hull.tol) for y in obs.vertices)
    if not outside:
        return False
    return any(
        segment_crosses_interior(net.nodes[a], net.nodes[b], obs.polygon)
        for a, b in net.edges
    )


def fixed_program(tp: TangentPlanes, obstacles: Sequence[Obstacle], margin_cap: float | None = None) -> LinProgram:
    """Inequalities on ``(vx, vy, c)`` per obstacle for given tangent planes.

    With ``margin_cap`` an extra variable ``delta`` in ``[0, margin_cap]``
    is subtracted from every obstacle-vertex bound and maximized, which
    pushes the witness away from touching the obstacle.
    """
    s = len(obstacles)
    X = tp.points
    a = tp.support_values()
    W, D = tp.arrays()
    nv = 3 * s + (margin_cap is not None)
    lp = LinProgram(nv)
    for q, obs in enumerate(obstacles):
        base = 3 * q
        for x, ai in zip(X, a):
            row = np.zeros(nv)
            row[base : base + 3] = (x[0], x[1], 1.0)
            lp.add_ge(row, ai)
        b = (obs.vertices @ W.T + D).min(axis=1)
        for y, bp in zip(obs.vertices, b):
            row = np.zeros(nv)
            row[base : base + 3] = (y[0], y[1], 1.0)
            if margin_cap is not None:
                row[-1] = 1.0
            lp.add_le(row, bp)
        for r in range(s):
            if r == q:
                continue
            for y in obs.vertices:
                row = np.zeros(nv)
                row[base : base + 3] = (y[0], y[1], 1.0)
                row[3 * r : 3 * r + 3] = (-y[0], -y[1], -1.0)
                lp.add_le(row, 0.0)
    if margin_cap is not None:
        lp.set_bounds(nv - 1, 0.0, margin_cap)
        c = np.zeros(nv)
        c[-1] = -1.0
        lp.set_objective(c)
    return lp


def avoid_multi(fs: ForceSystem, obstacles: Sequence[Obstacle]) -> SynthesisResult:
    """One cleaving plane per obstacle, all forces given.

    Existence is decided by the plain feasibility program; the returned
    planes then maximize a (capped) clearance below the open envelope on the
    obstacle vertices.
    """
    if fs.reactive:
        raise EquilibriumError("avoid_multi needs every force given; use solve_reactive")
    if not obstacles:
        raise ValueError("need at least one obstacle")
    if not check_compressibility(fs):
        raise EquilibriumError("force system is not compressible")
    tp = tangent_planes(fs)
    out = solve_feasibility(fixed_program(tp, obstacles))
    if not out.feasible:
        return SynthesisResult(LpStatus.INFEASIBLE, fs, tp.planes, iterations=out.iterations)
    x = out.x
    iters = out.iterations
    # stage 2: largest clearance; stage 3: keep half of it and lift each
    # plane at its obstacle centroid so every loop hugs its own obstacle
    lp = fixed_program(tp, obstacles, margin_cap=fs.moment_scale)
    best = solve_min(lp)
    if best.feasible:
        x = best.x
        iters += best.iterations
        lp.set_bounds(lp.n - 1, 0.5 * best.x[-1], fs.moment_scale)
        c = np.zeros(lp.n)
        for q, obs in enumerate(obstacles):
            y = obs.centroid
            c[3 * q : 3 * q + 3] = (-y[0], -y[1], -1.0)
        lp.set_objective(c)
        tight = solve_min(lp)
        if tight.feasible:
            x = tight.x
            iters += tight.iterations
    cleaving = tuple(PlaneFunc(*x[3 * q : 3 * q + 3]) for q in range(len(obstacles)))
    env, net, gammas, contact = _assemble(fs, tp.planes, cleaving, obstacles)
    return SynthesisResult(
        LpStatus.FEASIBLE, fs, tp.planes, cleaving, env, net, {}, None, gammas, contact, iters
    )


def single_program(env0: ConcaveEnvelope, points, obs: Obstacle, margin_cap: float | None = None) -> LinProgram:
    """Three-variable program for one obstacle, read off the open envelope.

    Unlike ``fixed_program`` the bounds come from evaluating ``env0`` at the
    force points and the obstacle vertices, so the two routes share no rows.
    """
    X = np.asarray(points, float)
    Y = obs.vertices
    a = env0(X)
    b = env0(Y)
    nv = 3 if margin_cap is None else 4
    lp = LinProgram(nv)
    for x, ai in zip(X, a):
        lp.add_ge(np.r_[x, 1.0, np.zeros(nv - 3)], ai)
    for y, bp in zip(Y, b):
        lp.add_le(np.r_[y, 1.0, np.ones(nv - 3)], bp)
    if margin_cap is not None:
        lp.set_bounds(3, 0.0, margin_cap)
        lp.set_objective([0.0, 0.0, 0.0, -1.0])
    return lp


def avoid_single(fs: ForceSystem, obs: Obstacle) -> SynthesisResult:
    """One cleaving plane for one obstacle, all forces given."""
    if fs.reactive:
        raise EquilibriumError("avoid_single needs every force given; use solve_reactive")
    if not check_compressibility(fs):
        raise EquilibriumError("force system is not compressible")
    tp = tangent_planes(fs)
    env0 = open_envelope(fs)
    out = solve_feasibility(single_program(env0, fs.points, obs))
    if not out.feasible:
        return SynthesisResult(LpStatus.INFEASIBLE, fs, tp.planes, iterations=out.iterations)
    x, iters = out.x, out.iterations
    lp = single_program(env0, fs.points, obs, margin_cap=fs.moment_scale)
    best = solve_min(lp)
    if best.feasible:
        x, iters = best.x, iters + best.iterations
        lp.set_bounds(3, 0.5 * best.x[3], fs.moment_scale)
        y = obs.centroid
        lp.set_objective([-y[0], -y[1], -1.0, 0.0])
        tight = solve_min(lp)
        if tight.feasible:
            x, iters = tight.x, iters + tight.iterations
    L = PlaneFunc(*x[:3])
    env, net, gammas, contact = _assemble(fs, tp.planes, (L,), (obs,))
    return SynthesisResult(LpStatus.FEASIBLE, fs, tp.planes, (L,), env, net, {}, None, gammas, contact, iters)


# ---------------------------------------------------------------------------
# reactive forces


class ReactiveProgram:
    """Linear program in the reactive forces and the cleaving planes.

    Variables: ``p, q >= 0`` with reaction ``t_i = p_i - q_i`` (two
    components per reactive point), then ``(vx, vy, c)`` per obstacle.
    Every boundary plane is affine in these variables through the chain
    ``w_{k+1} = w_k + rot90(t_k)``, ``d_{k+1} = d_k - rot90(t_k) . x_k``
    starting from the zero plane; closing the chain gives the three
    balance equalities.
    """

    def __init__(self, fs: ForceSystem, obstacles: Sequence[Obstacle] = (), budget: float | None = None):
        self.fs = fs
        self.obstacles = list(obstacles)
        self.reactive = sorted(fs.reactive)
        n = fs.n
        nr = len(self.reactive)
        self.nt = 2 * nr
        self.nv = 2 * self.nt + 3 * len(self.obstacles)
        if self.nv == 0:
            raise ValueError("nothing to solve: no reactive forces and no obstacles")
        X = fs.points
        # constant and linear parts of plane k: w_k = W0[k] + GW[k] @ u, d_k = D0[k] + GD[k] @ u
        W0 = np.zeros((n + 1, 2))
        D0 = np.zeros(n + 1)
        GW = np.zeros((n + 1, 2, self.nv))
        GD = np.zeros((n + 1, self.nv))
        col = {i: k for k, i in enumerate(self.reactive)}
        for i in range(n):
            W0[i + 1], D0[i + 1] = W0[i], D0[i]
            GW[i + 1], GD[i + 1] = GW[i], GD[i]
            if i in col:
                # rot90(t) = (-t_y, t_x), t = p - q
                k = col[i]
                px, py = 2 * k, 2 * k + 1
                qx, qy = self.nt + px, self.nt + py
                for (cx, cy), sgn in (((px, py), 1.0), ((qx, qy), -1.0)):
                    GW[i + 1, 0, cy] -= sgn
                    GW[i + 1, 1, cx] += sgn
                    # d -= rot90(t) . x = -(-t_y x + t_x y)
                    GD[i + 1, cy] += sgn * X[i, 0]
                    GD[i + 1, cx] -= sgn * X[i, 1]
            else:
                j = rot90(fs.forces[i])
                W0[i + 1] += j
                D0[i + 1] -= j @ X[i]
        self.W0, self.D0, self.GW, self.GD = W0, D0, GW, GD
        self.tol = 1e-9 * fs.moment_scale
        active = [i for i in range(n) if i not in fs.reactive]
        scale = float(np.hypot(*fs.forces[active].T).sum()) if active else 1.0
        self.budget = 100.0 * scale if budget is None else float(budget)
        self.objective: np.ndarray | None = None
        self.objective_const = 0.0

    # affine forms ---------------------------------------------------------

    def plane_at(self, k: int, x) -> tuple[np.ndarray, float]:
        """``L_k(x)`` as ``(coefficients, constant)``."""
        x = np.asarray(x, float)
        return x @ self.GW[k] + self.GD[k], float(self.W0[k] @ x + self.D0[k])

    def cleave_at(self, q: int, x) -> np.ndarray:
        row = np.zeros(self.nv)
        base = 2 * self.nt + 3 * q
        row[base : base + 3] = (x[0], x[1], 1.0)
        return row

    def planes_of(self, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        W = self.W0 + self.GW @ u
        D = self.D0 + self.GD @ u
        return W[: self.fs.n], D[: self.fs.n]

    def cleaving_of(self, u: np.ndarray) -> tuple[PlaneFunc, ...]:
        base = 2 * self.nt
        return tuple(PlaneFunc(*u[base + 3 * q : base + 3 * q + 3]) for q in range(len(self.obstacles)))

    def reactions_of(self, u: np.ndarray) -> np.ndarray:
        t = u[: self.nt] - u[self.nt : 2 * self.nt]
        return t.reshape(-1, 2)

    # objectives -------------------------------------------------------------

    def objective_total_weight(self) -> tuple[np.ndarray, float]:
        """``-sum_k w_k . n_k |e_k|`` as coefficients plus a constant."""
        fs = self.fs
        X = fs.points
        e = X - np.roll(X, 1, axis=0)
        nl = fs.orientation * np.column_stack((e[:, 1], -e[:, 0]))
        coef = -np.einsum("kj,kjv->v", nl, self.GW[: fs.n])
        const = -float(np.einsum("kj,kj->", nl, self.W0[: fs.n]))
        return coef, const

    def objective_cleave_height(self, q: int) -> tuple[np.ndarray, float]:
        if not 0 <= q < len(self.obstacles):
            raise IndexError(f"no obstacle {q}")
        return self.cleave_at(q, self.obstacles[q].centroid), 0.0

    def set_objective(self, spec) -> None:
        if spec is None or spec == "weight":
            self.objective, self.objective_const = self.objective_total_weight()
        elif isinstance(spec, tuple) and spec[0] == "cleave":
            self.objective, self.objective_const = self.objective_cleave_height(int(spec[1]))
        elif spec == "none":
            self.objective, self.objective_const = None, 0.0
        else:
            raise ValueError(f"unknown objective {spec!r}")

    # program ----------------------------------------------------------------

    def _concavity_row(self, i: int, j: int):
        """``L_i(x_i) - L_j(x_i) <= 0``."""
        x = self.fs.points[i]
        aj, cj = self.plane_at(j, x)
        ai, ci = self.plane_at(i, x)
        return ai - aj, cj - ci

    def base_program(self) -> LinProgram:
        fs = self.fs
        n = fs.n
        lp = LinProgram(self.nv)
        for v in range(2 * self.nt):
            lp.set_bounds(v, 0.0, None)
        # closure: plane n equals plane 0 (the zero plane)
        for comp in range(2):
            lp.add_eq(self.GW[n, comp], -self.W0[n, comp])
        lp.add_eq(self.GD[n], -self.D0[n])
        if self.nt:
            row = np.zeros(self.nv)
            row[: 2 * self.nt] = 1.0
            lp.add_le(row, self.budget)
        if n > 3:
            for i in range(n):
                for j in ((i - 1) % n, (i + 2) % n):
                    a, b = self._concavity_row(i, j)
                    lp.add_le(a, b)
        else:
            for i in range(n):
                a, b = self._concavity_row(i, (i - 1) % n)
                lp.add_le(a, b)
        # the rest of the cleave-vs-support rows are lazy; these three bound
        # the cleaving plane below at the obstacle centroid from the start
        for q, obs in enumerate(self.obstacles):
            for i in self._seed_triangle(obs.centroid):
                a, c = self.plane_at(i, fs.points[i])
                lp.add_le(a - self.cleave_at(q, fs.points[i]), -c)
        obj = self.solver_objective()
        if obj is not None:
            lp.set_objective(obj)
        return lp

    def _seed_triangle(self, y) -> tuple[int, int, int]:
        """Fan triangle ``(0, k, k+1)`` of the point polygon containing ``y``."""
        X = self.fs.points
        n = len(X)

        def cross(o, a, b):
            return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

        best, score = (0, n // 3, (2 * n) // 3), -np.inf
        for k in range(1, n - 1):
            tri = (X[0], X[k], X[k + 1])
            s = self.fs.orientation
            m = min(s * cross(tri[0], tri[1], y), s * cross(tri[1], tri[2], y), s * cross(tri[2], tri[0], y))
            if m > score:
                best, score = (0, k, k + 1), m
        return best

    def solver_objective(self) -> np.ndarray | None:
        """The objective plus a small charge on reaction size.

        Self-stress along a straight support costs nothing in the weight
        functional; the charge keeps such drift out of the optimum.
        """
        if not self.nt:
            return self.objective
        charge = np.zeros(self.nv)
        charge[: 2 * self.nt] = REACTION_CHARGE * bbox_diagonal(self.fs.points)
        return charge if self.objective is None else self.objective + charge

    def separate(self, u: np.ndarray):
        """Most violated concavity row per point and obstacle row per vertex."""
        fs = self.fs
        n = fs.n
        W, D = self.planes_of(u)
        V = fs.points @ W.T + D
        M = V - np.diag(V)[:, None]
        idx = np.arange(n)
        M[idx, idx] = np.inf
        M[idx, (idx + 1) % n] = np.inf
        rows, rhs = [], []
        k = min(CONCAVITY_CUTS, n)
        worst = np.argpartition(M, k - 1, axis=1)[:, :k]
        for i in range(n):
            for j in worst[i]:
                if M[i, j] < -self.tol:
                    a, b = self._concavity_row(i, int(j))
                    rows.append(a)
                    rhs.append(b)
        cleave = self.cleaving_of(u)
        a_i = np.diag(V)
        for q, L in enumerate(cleave):
            # cleaving planes stay above every support height
            short = L(fs.points) - a_i
            for i in np.argsort(short)[:POINT_CUTS]:
                if short[i] < -self.tol:
                    a, c = self.plane_at(int(i), fs.points[i])
                    rows.append(a - self.cleave_at(q, fs.points[i]))
                    rhs.append(-c)
        for q, (obs, L) in enumerate(zip(self.obstacles, cleave)):
            Y = obs.vertices
            gap = (Y @ W.T + D) - L(Y)[:, None]
            worst = gap.min(axis=1)
            # neighbouring vertices give nearly the same row; take a few per round
            for p in np.argsort(worst)[:VERTEX_CUTS]:
                i = int(np.argmin(gap[p]))
                if gap[p, i] < -self.tol:
                    a, c = self.plane_at(i, Y[p])
                    rows.append(self.cleave_at(q, Y[p]) - a)
                    rhs.append(c)
            # other cleaving planes stay above this obstacle
            if len(cleave) > 1:
                others = [r for r in range(len(cleave)) if r != q]
                own = L(Y)
                for p, y in enumerate(Y):
                    r = min(others, key=lambda k: cleave[k](y))
                    if cleave[r](y) - own[p] < -self.tol:
                        rows.append(self.cleave_at(q, y) - self.cleave_at(r, y))
                        rhs.append(0.0)
        return rows, rhs


def _reduce_open(fs: ForceSystem) -> SynthesisResult:
    if not check_compressibility(fs):
        return SynthesisResult(LpStatus.INFEASIBLE, fs)
    tp = tangent_planes(fs)
    env, net, gammas, contact = _assemble(fs, tp.planes, (), ())
    return SynthesisResult(LpStatus.FEASIBLE, fs, tp.planes, (), env, net, objective_value=total_weight(net))


def solve_reactive(
    fs: ForceSystem,
    obstacles: Sequence[Obstacle] = (),
    objective="weight",
    max_rounds: int = 500,
) -> SynthesisResult:
    """Reactions and cleaving planes for a net avoiding every obstacle.

    ``objective`` is ``"weight"`` (default), ``("cleave", q)`` or ``"none"``.
    """
    if not fs.reactive and not obstacles:
        return _reduce_open(fs)
    budget = None
    for _attempt in range(4):
        prog = ReactiveProgram(fs, obstacles, budget)
        prog.set_objective(objective)
        lp = prog.base_program()
        out, cuts, iters = _solve_with_separation(prog, lp, max_rounds)
        if out.status is LpStatus.UNBOUNDED:
            # only the cleave-height objective can run away once the budget binds
            msg = "reactive program unbounded"
            if isinstance(objective, tuple):
                y = obstacles[int(objective[1])].centroid
                if not convex_hull(fs.points).contains(y):
                    msg += "; the obstacle centroid lies outside the hull of the force points"
            raise SolverError(msg)
        if not out.feasible:
            return SynthesisResult(LpStatus.INFEASIBLE, fs, iterations=iters)
        if prog.nt and _budget_binds(prog, out.x):
            budget = prog.budget * 10
            log.info("reaction budget binds; retrying with %.3g", budget)
            continue
        return _finish_reactive(fs, prog, out, iters)
    raise SolverError("reaction budget keeps binding; forces may be unbounded")


def _budget_binds(prog: ReactiveProgram, u: np.ndarray) -> bool:
    return float(u[: 2 * prog.nt].sum()) >= prog.budget * (1 - 1e-6)


def _solve_with_separation(prog: ReactiveProgram, lp: LinProgram, max_rounds: int):
    """Solve, then add violated rows until none are left; returns (outcome, cuts, pivots)."""
    solver = SimplexSolver(lp)
    out = solver.solve()
    cuts = []
    rounds = 0
    while out.feasible:
        rows, rhs = prog.separate(out.x)
        if not rows:
            break
        rounds += 1
        if rounds > max_rounds:
            raise SolverError("cut generation did not converge")
        cuts.extend(zip(rows, rhs))
        solver.purge()
        solver.add_rows(np.asarray(rows), np.asarray(rhs))
        out = solver.resolve()
    log.debug("reactive LP: %d rounds, %d pivots, status %s, tableau %s", rounds, solver.iterations, out.status.value, None if solver.T is None else solver.T.shape)
    return out, cuts, solver.iterations


def _finish_reactive(fs: ForceSystem, prog: ReactiveProgram, out, iterations: int) -> SynthesisResult:
    u = out.x
    t = prog.reactions_of(u)
    forces = fs.forces.copy()
    scale = max(fs.force_scale, float(np.hypot(*t.T).sum()) if len(t) else 0.0)
    small = np.hypot(*t.T) <= 1e-12 * scale if len(t) else np.zeros(0, bool)
    t[small] = 0.0
    for k, i in enumerate(prog.reactive):
        forces[i] = t[k]
    solved = ForceSystem(fs.points, forces, (), fs.bal_tol)
    tp = tangent_planes(solved)
    # dual route: LP planes versus the forward chain of the solved forces
    W, D = prog.planes_of(u)
    Wc, Dc = tp.arrays()
    gap = np.abs(fs.points @ (W - Wc).T + (D - Dc)).max()
    if gap > solved.value_tol:
        raise ConsistencyError(f"LP planes differ from the chained planes by {gap:.3g}")
    M = concavity_margins(tp)
    np.fill_diagonal(M, np.inf)
    if M.min() < -solved.value_tol:
        raise ConsistencyError("solved boundary planes are not concave at the vertices")
    cleaving = prog.cleaving_of(u)
    env, net, gammas, contact = _assemble(solved, tp.planes, cleaving, prog.obstacles)
    value = None
    if prog.objective is not None:
        value = float(prog.objective @ u + prog.objective_const)
    reactions = {i: forces[i].copy() for i in prog.reactive}
    return SynthesisResult(
        LpStatus.FEASIBLE, solved, tp.planes, cleaving, env, net, reactions, value, gammas, contact, iterations
    )
