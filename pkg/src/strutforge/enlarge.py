"""Lowering, tilting and rolling a single cleaving plane.

Support heights ``a_i = L_i(x_i)`` lift the force points to ``P_i``.  A plane
is admissible when every ``P_i`` lies on or below it.  The room left for an
obstacle is ``Gamma = {x in hull : L(x) <= phi0(x)}``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .envelope import ConcaveEnvelope, EmptyRegionError, gamma_region, open_envelope
from .equilibrium import BAL_TOL, ForceSystem, TangentPlanes, check_compressibility, tangent_planes
from .geometry import ConvexPolygon, GeometryError, PlaneFunc, bbox_diagonal, polygon_contains


class DegenerateTiltError(GeometryError):
    """The plane cannot be tilted (it coincides with the facet plane)."""


class InadmissiblePlaneError(GeometryError):
    """Some lifted support point lies above the plane."""


@dataclass
class CleavingContext:
    """Everything the rolling needs about one force system."""

    tp: TangentPlanes
    env: ConcaveEnvelope
    heights: np.ndarray
    tol: float

    @classmethod
    def from_force_system(cls, fs: ForceSystem, tol: float | None = None) -> "CleavingContext":
        if not check_compressibility(fs):
            raise GeometryError("force system is not compressible")
        tp = tangent_planes(fs)
        env = open_envelope(fs)
        # contacts are judged at the default balance tolerance even when the
        # force system was admitted with a looser one
        t = BAL_TOL * fs.moment_scale if tol is None else tol
        return cls(tp, env, tp.support_values(), t)

    @property
    def points(self) -> np.ndarray:
        return self.tp.points

    @property
    def n(self) -> int:
        return len(self.heights)

    def gaps(self, L: PlaneFunc) -> np.ndarray:
        """``L(x_i) - a_i``; all non-negative for admissible planes."""
        return L(self.points) - self.heights

    def touching(self, L: PlaneFunc) -> frozenset[int]:
        return frozenset(int(i) for i in np.flatnonzero(self.gaps(L) <= self.tol))

    def gamma(self, L: PlaneFunc) -> ConvexPolygon | None:
        try:
            return gamma_region(self.env, L)
        except EmptyRegionError:
            return None


@dataclass(frozen=True)
class CleavingState:
    plane: PlaneFunc
    touching: frozenset[int]
    gamma: ConvexPolygon | None

    def key(self) -> tuple[int, ...]:
        return tuple(sorted(self.touching))


def _context(obj) -> CleavingContext:
    if isinstance(obj, CleavingContext):
        return obj
    if isinstance(obj, ForceSystem):
        return CleavingContext.from_force_system(obj)
    raise TypeError("expected a CleavingContext or a ForceSystem")


def _state(ctx: CleavingContext, L: PlaneFunc) -> CleavingState:
    return CleavingState(L, ctx.touching(L), ctx.gamma(L))


def lower_plane(ctx, L: PlaneFunc) -> CleavingState:
    """Shift ``L`` down until it first touches a lifted support point."""
    ctx = _context(ctx)
    g = ctx.gaps(L)
    if g.min() < -ctx.tol:
        raise InadmissiblePlaneError(f"support point {int(np.argmin(g)) + 1} lies above the plane")
    return _state(ctx, L.shifted(-float(g.min())))


def _line_function(p, q, inside) -> PlaneFunc:
    """Affine function vanishing on the line ``p q``, positive at ``inside``."""
    d = np.asarray(q, float) - np.asarray(p, float)
    ln = float(np.hypot(*d))
    if ln == 0:
        raise GeometryError("coincident support points")
    nrm = np.array([-d[1], d[0]]) / ln
    N = PlaneFunc(nrm[0], nrm[1], -float(nrm @ p))
    if N(inside) < 0:
        N = N * -1.0
    return N


def _tilt_about_edge(ctx: CleavingContext, L: PlaneFunc, k: int, l: int) -> PlaneFunc:
    """Lower ``L`` on the hull side of the line through ``x_k, x_l`` until a third contact."""
    X = ctx.points
    N = _line_function(X[k], X[l], X.mean(axis=0))
    nv = N(X)
    g = ctx.gaps(L)
    scale = bbox_diagonal(X)
    mask = nv > 1e-12 * scale
    if not mask.any():
        return L
    beta = float(np.min(np.maximum(g[mask], 0.0) / nv[mask]))
    return L - N * beta


def tilt_plane(ctx, state: CleavingState) -> CleavingState:
    """Tilt about the line where the plane meets the contact facet.

    ``L'' = L' + alpha (L' - L_k)`` with the largest ``alpha`` keeping every
    lifted point below.  When the new contact is a neighbour of ``k`` (both
    on one facet), the plane is further lowered on the hull side of their
    common edge until a third contact.
    """
    ctx = _context(ctx)
    if len(state.touching) >= 2:
        return state
    if len(state.touching) != 1:
        raise GeometryError("tilting needs a plane touching exactly one support point")
    (k,) = state.touching
    Lp = state.plane
    Lk = ctx.tp.planes[k]
    X = ctx.points
    den = Lk(X) - Lp(X)
    num = ctx.gaps(Lp)
    pos = den > ctx.tol
    sign = 1.0
    if not pos.any():
        # already steeper than the facet on every point: rotate the other way
        pos = den < -ctx.tol
        sign = -1.0
    if not pos.any():
        raise DegenerateTiltError("cleaving plane coincides with the facet plane")
    ratios = np.full(len(X), np.inf)
    ratios[pos] = np.maximum(num[pos], 0.0) / (sign * den[pos])
    alpha = sign * float(ratios.min())
    l = int(np.argmin(ratios))
    L2 = Lp + (Lp - Lk) * alpha
    n = ctx.n
    if l in ((k + 1) % n, (k - 1) % n):
        L2 = _tilt_about_edge(ctx, L2, k, l)
    return _state(ctx, L2)


def _pencil(ctx: CleavingContext, i: int, j: int, inside) -> tuple[PlaneFunc, PlaneFunc, np.ndarray, np.ndarray]:
    """Planes through ``P_i`` and ``P_j``: ``base + s N``; returns base, N, N(x), base gaps."""
    X, a = ctx.points, ctx.heights
    d = X[j] - X[i]
    dd = float(d @ d)
    if dd == 0:
        raise GeometryError("coincident support points")
    slope = (a[j] - a[i]) / dd
    base = PlaneFunc(slope * d[0], slope * d[1], a[i] - slope * float(d @ X[i]))
    N = _line_function(X[i], X[j], inside)
    return base, N, N(X), base(X) - a


def _bounds(nv: np.ndarray, gb: np.ndarray, eps: float):
    """Admissible ``s`` interval from ``gb + s nv >= 0``: (lo, arg_lo, hi, arg_hi).

    Ties go to the smaller index; ``-1`` marks an unbounded side.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        v = -gb / nv
    up = nv > eps
    dn = nv < -eps
    lo, alo, hi, ahi = -np.inf, -1, np.inf, -1
    if up.any():
        vals = np.where(up, v, -np.inf)
        alo = int(np.argmax(vals))
        lo = float(vals[alo])
    if dn.any():
        vals = np.where(dn, v, np.inf)
        ahi = int(np.argmin(vals))
        hi = float(vals[ahi])
    return lo, alo, hi, ahi


def seed_plane(ctx, i: int) -> CleavingState:
    """Lowest admissible plane through ``P_i`` and ``P_{i+1}`` (an upper-hull facet)."""
    ctx = _context(ctx)
    n = ctx.n
    j = (i + 1) % n
    X = ctx.points
    base, N, nv, gb = _pencil(ctx, i, j, X.mean(axis=0))
    eps = 1e-12 * bbox_diagonal(X)
    lo, alo, _, _ = _bounds(nv, gb, eps)
    if alo < 0:
        raise GeometryError("all support points are collinear")
    return _state(ctx, base + N * lo)


def roll_from(ctx, i: int) -> list[CleavingState]:
    """Seed at ``P_i, P_{i+1}`` and roll about ``P_i`` until ``P_{i-1}`` is reached.

    Each step rotates about the line from ``P_i`` to the farthest contact
    (in the forward order), lifting the earlier contacts, until the plane
    meets the next lifted point.
    """
    ctx = _context(ctx)
    n = ctx.n
    X = ctx.points
    eps = 1e-12 * bbox_diagonal(X)
    stop = (i - 1) % n

    def fwd(k):
        return (k - i) % n

    state = seed_plane(ctx, i)
    out = [state]
    for _ in range(n):
        if stop in state.touching:
            break
        latest = max(state.touching - {i}, key=fwd)
        base, N, nv, gb = _pencil(ctx, i, latest, X.mean(axis=0))
        lifted = [k for k in state.touching if abs(nv[k]) > eps]
        if not lifted:
            break
        ref = max(lifted, key=lambda k: abs(nv[k]))
        if nv[ref] < 0:
            N, nv = N * -1.0, -nv
        _, _, hi, ahi = _bounds(nv, gb, eps)
        if ahi < 0:
            break
        new = _state(ctx, base + N * hi)
        if new.key() == state.key():
            break
        out.append(new)
        state = new
    return out


def roll_maximal_regions(fs_or_ctx) -> list[CleavingState]:
    """All states visited by rolling from every seed, deduplicated by touching set."""
    ctx = _context(fs_or_ctx)
    seen: dict[tuple[int, ...], CleavingState] = {}
    for i in range(ctx.n):
        for st in roll_from(ctx, i):
            seen.setdefault(st.key(), st)
    return [seen[k] for k in sorted(seen)]


def strict_superset(outer: ConvexPolygon | None, inner: ConvexPolygon | None, tol: float) -> bool:
    if outer is None:
        return False
    if inner is None:
        return outer.area > tol * tol
    if not all(polygon_contains(outer, v, tol=tol) for v in inner.vertices):
        return False
    return outer.area > inner.area + tol * bbox_diagonal(outer.vertices)


def is_maximal(ctx, state: CleavingState, rel_delta: float = 1e-4) -> bool:
    """No admissible +-delta perturbation of the plane gives a strictly larger Gamma."""
    ctx = _context(ctx)
    if len(state.touching) < 2:
        return False
    X = ctx.points
    diag = bbox_diagonal(X)
    vscale = max(float(np.ptp(ctx.heights)), ctx.tol)
    dc = rel_delta * vscale
    dv = dc / diag
    L = state.plane
    gtol = ctx.env.tol * 10
    for dvec in ((dv, 0, 0), (-dv, 0, 0), (0, dv, 0), (0, -dv, 0), (0, 0, dc), (0, 0, -dc)):
        Lp = L + PlaneFunc(*dvec)
        if ctx.gaps(Lp).min() < -ctx.tol:
            continue
        if strict_superset(ctx.gamma(Lp), state.gamma, gtol):
            return False
    return True


def touching_sequence(states: Sequence[CleavingState], one_based: bool = True) -> list[tuple[int, ...]]:
    off = 1 if one_based else 0
    return [tuple(k + off for k in st.key()) for st in states]
