"""Force systems at the vertices of a convex polygon and their tangent planes.

Plane ``k`` (0-based) is the affine piece of the Airy function on the strip
outside the boundary edge from point ``k-1`` to point ``k``.  Crossing point
``k`` adds the gradient jump ``rot90(t_k)``; offsets follow from continuity at
the point.  ``planes[0]`` is pinned to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    GeometryError,
    PlaneFunc,
    ZERO_PLANE,
    as_points,
    convex_orientation,
    cross2,
    plane_arrays,
    rot90,
    scale_tol,
)

BAL_TOL = 1e-6


class EquilibriumError(ValueError):
    """Force system is unbalanced or otherwise unusable."""


class ConsistencyError(RuntimeError):
    """Two routes to the same quantity disagree beyond tolerance."""


class ForceSystem:
    """Points on a convex polygon carrying forces; some forces may be reactive.

    Points may be listed counter-clockwise or clockwise.  For clockwise input
    the forces are read with the opposite sign convention (force exerted by
    the net on its support); ``loads`` always returns the physical loads.
    Reactive forces are stored as NaN until solved.
    """

    def __init__(self, points, forces=None, reactive: Iterable[int] = (), bal_tol: float = BAL_TOL):
        pts = as_points(points).copy()
        n = len(pts)
        if n < 3:
            raise GeometryError("a force system needs at least 3 points")
        reactive = frozenset(int(i) for i in reactive)
        if any(i < 0 or i >= n for i in reactive):
            raise EquilibriumError("reactive index out of range")
        if forces is None:
            frc = np.full((n, 2), np.nan)
        else:
            frc = np.array(
                [[np.nan, np.nan] if f is None else f for f in forces], dtype=float
            ).reshape(-1, 2)
        if frc.shape != (n, 2):
            raise EquilibriumError("forces and points differ in length")
        for i in range(n):
            if i in reactive:
                frc[i] = np.nan
            elif not np.all(np.isfinite(frc[i])):
                raise EquilibriumError(f"force {i + 1} missing or non-finite")
        orient = convex_orientation(pts)
        if orient == 0:
            raise GeometryError("points are not the vertices of a convex polygon in order")
        self.points = pts
        self.forces = frc
        self.reactive = reactive
        self.orientation = orient
        self.bal_tol = float(bal_tol)
        self.points.setflags(write=False)
        self.forces.setflags(write=False)

    def __len__(self) -> int:
        return len(self.points)

    def __repr__(self) -> str:
        return f"ForceSystem(n={len(self)}, reactive={sorted(self.reactive)}, orientation={self.orientation})"

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def active(self) -> list[int]:
        return [i for i in range(self.n) if i not in self.reactive]

    def point(self, i: int) -> np.ndarray:
        """Index-wrapped access."""
        return self.points[i % self.n]

    def force(self, i: int) -> np.ndarray:
        return self.forces[i % self.n]

    @property
    def loads(self) -> np.ndarray:
        """Physical loads on the net (sign-corrected for clockwise input)."""
        return self.orientation * self.forces

    @property
    def geom_tol(self) -> float:
        return scale_tol(self.points)

    @property
    def force_scale(self) -> float:
        f = self.forces[np.all(np.isfinite(self.forces), axis=1)]
        s = float(np.hypot(f[:, 0], f[:, 1]).sum()) if len(f) else 0.0
        return s if s > 0 else 1.0

    @property
    def moment_scale(self) -> float:
        f = np.nan_to_num(self.forces)
        r = self.points - self.points.mean(axis=0)
        s = float((np.hypot(*r.T) * np.hypot(*f.T)).sum())
        return s if s > 0 else 1.0

    @property
    def value_tol(self) -> float:
        """Tolerance on Airy-function values (force x length units)."""
        return self.bal_tol * self.moment_scale

    def with_forces(self, forces, reactive: Iterable[int] = ()) -> "ForceSystem":
        return ForceSystem(self.points, forces, reactive, self.bal_tol)

    def translated(self, d) -> "ForceSystem":
        return ForceSystem(self.points + np.asarray(d, float), self._given(), self.reactive, self.bal_tol)

    def transformed(self, R) -> "ForceSystem":
        R = np.asarray(R, float)
        f = self.forces @ R.T
        return ForceSystem(self.points @ R.T, self._given(f), self.reactive, self.bal_tol)

    def _given(self, f=None):
        f = self.forces if f is None else f
        return [None if i in self.reactive else f[i] for i in range(self.n)]


def _require_given(fs: ForceSystem) -> None:
    if fs.reactive:
        raise EquilibriumError("balance is undefined while reactive forces are unsolved")


def balance_residual(fs: ForceSystem) -> tuple[np.ndarray, float]:
    """Net force and net torque about the centroid of the points."""
    _require_given(fs)
    c = fs.points.mean(axis=0)
    return fs.forces.sum(axis=0), float(cross2(fs.points - c, fs.forces).sum())


def check_balance(fs: ForceSystem) -> bool:
    """Net force and torque vanish relative to the force and moment scales."""
    net, torque = balance_residual(fs)
    tol = fs.bal_tol
    return bool(
        np.hypot(*net) <= tol * fs.force_scale and abs(torque) <= tol * fs.moment_scale
    )


@dataclass(frozen=True)
class TangentPlanes:
    planes: tuple[PlaneFunc, ...]
    points: np.ndarray = field(repr=False)
    closure: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __len__(self) -> int:
        return len(self.planes)

    def __getitem__(self, i: int) -> PlaneFunc:
        return self.planes[i % len(self.planes)]

    def support_values(self) -> np.ndarray:
        """``a_i = L_i(x_i)``, the plane value at the point that closes its edge."""
        return np.array([self.planes[i](self.points[i]) for i in range(len(self.planes))])

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return plane_arrays(self.planes)


def chain_planes(points: np.ndarray, forces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward substitution: gradients ``(n+1, 2)`` and offsets ``(n+1,)``."""
    n = len(points)
    W = np.zeros((n + 1, 2))
    D = np.zeros(n + 1)
    jumps = rot90(forces)
    for i in range(n):
        W[i + 1] = W[i] + jumps[i]
        D[i + 1] = D[i] - jumps[i] @ points[i]
    return W, D


def tangent_planes(fs: ForceSystem) -> TangentPlanes:
    """Boundary planes with ``L_1 = 0`` and continuity at every point.

    A closure residual within tolerance is spread linearly over the chain so
    that the last plane closes onto the first.
    """
    if not check_balance(fs):
        net, torque = balance_residual(fs)
        raise EquilibriumError(f"unbalanced force system (net force {net.tolist()}, torque {torque:.6g})")
    n = fs.n
    W, D = chain_planes(fs.points, fs.forces)
    rw, rd = W[n].copy(), float(D[n])
    ramp = np.arange(n + 1) / n
    W -= ramp[:, None] * rw
    D -= ramp * rd
    planes = tuple(PlaneFunc(W[k, 0], W[k, 1], D[k]) for k in range(n))
    planes = (ZERO_PLANE,) + planes[1:]
    return TangentPlanes(planes, fs.points.copy(), (float(rw[0]), float(rw[1]), rd))


def concavity_margins(tp: TangentPlanes) -> np.ndarray:
    """Matrix ``M[i, j] = L_j(x_i) - L_i(x_i)``; concave iff all entries >= 0."""
    W, D = tp.arrays()
    V = tp.points @ W.T + D
    return V - np.diag(V)[:, None]


def torque_sums(fs: ForceSystem) -> np.ndarray:
    """``S[i, m] = sum_{k=i}^{i+m} (x_k - x_i) . rot90(t_k)`` for runs starting at ``i``."""
    n = fs.n
    X = fs.points
    J = rot90(fs.forces)
    S = np.zeros((n, n))
    for i in range(n):
        idx = (i + np.arange(n)) % n
        terms = np.einsum("ij,ij->i", X[idx] - X[i], J[idx])
        S[i] = np.cumsum(terms)
    return S


def check_compressibility(fs: ForceSystem) -> bool:
    """Vertex concavity of the tangent planes, cross-checked by torque sums.

    Runs of consecutive forces must have non-positive torque sums
    ``S[i, m] <= 0``; this equals ``-(L_j(x_i) - L_i(x_i))`` with
    ``j = i + m + 1``, so both routes must agree.
    """
    tp = tangent_planes(fs)
    tol = fs.value_tol
    M = concavity_margins(tp)
    np.fill_diagonal(M, np.inf)
    by_planes = bool(M.min() >= -tol)

    S = torque_sums(fs)
    by_torque = bool(S[:, : fs.n - 1].max() <= tol)
    if by_planes != by_torque:
        # the two forms differ only by the closure spread; accept agreement
        # inside a doubled band, otherwise the construction is inconsistent
        worst_planes = M.min()
        worst_torque = -S[:, : fs.n - 1].max()
        if abs(worst_planes) > 2 * tol and abs(worst_torque) > 2 * tol:
            raise ConsistencyError(
                f"concavity ({worst_planes:.3g}) and torque ({worst_torque:.3g}) forms disagree"
            )
    return by_planes


def support_values(planes: Sequence[PlaneFunc], points) -> np.ndarray:
    """Open-envelope values ``min_j L_j(x_i)`` at the given points."""
    W, D = plane_arrays(planes)
    V = np.asarray(points, float) @ W.T + D
    return V.min(axis=1)
