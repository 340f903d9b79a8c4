"""Dense tableau simplex for small and medium linear programs.

Two phases with artificial variables, Dantzig pricing that falls back to
Bland's rule after a run of degenerate pivots, and a dual simplex for
re-optimizing after constraint rows are appended (lazy cut generation).
Every feasible answer is refined from the final basis and checked against
the original constraints before it is returned.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .kernels import pivot as _pivot

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
LP_REL_TOL = 1e-8
_DEGENERATE_RUN = 50


class SolverError(RuntimeError):
    """Simplex stalled or produced a witness that fails verification."""


class LpStatus(enum.Enum):
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass
class LpOutcome:
    status: LpStatus
    x: np.ndarray | None = None
    objective: float | None = None
    iterations: int = 0

    @property
    def feasible(self) -> bool:
        return self.status is LpStatus.FEASIBLE

    def __bool__(self) -> bool:
        return self.feasible


class LinProgram:
    """``min c.x`` s.t. ``A_eq x = b_eq``, ``A_ub x <= b_ub`` and per-variable bounds.

    Variables are free unless bounded.
    """

    def __init__(self, nvars: int):
        if nvars < 1:
            raise ValueError("need at least one variable")
        self.n = int(nvars)
        self.eq_rows: list[np.ndarray] = []
        self.eq_rhs: list[float] = []
        self.ub_rows: list[np.ndarray] = []
        self.ub_rhs: list[float] = []
        self.objective: np.ndarray | None = None
        self.lower = np.full(self.n, -np.inf)
        self.upper = np.full(self.n, np.inf)

    def _vec(self, a) -> np.ndarray:
        a = np.asarray(a, float).reshape(-1)
        if a.shape != (self.n,):
            raise ValueError(f"coefficient vector has length {a.size}, expected {self.n}")
        if not np.all(np.isfinite(a)):
            raise ValueError("non-finite coefficient")
        return a

    @staticmethod
    def _rhs(b) -> float:
        b = float(b)
        if not math.isfinite(b):
            raise ValueError("non-finite right-hand side")
        return b

    def add_eq(self, a, b) -> None:
        self.eq_rows.append(self._vec(a))
        self.eq_rhs.append(self._rhs(b))

    def add_le(self, a, b) -> None:
        self.ub_rows.append(self._vec(a))
        self.ub_rhs.append(self._rhs(b))

    def add_ge(self, a, b) -> None:
        self.add_le(-self._vec(a), -self._rhs(b))

    def set_objective(self, c) -> None:
        self.objective = self._vec(c)

    def set_bounds(self, j: int, lo=None, hi=None) -> None:
        lo = -np.inf if lo is None else float(lo)
        hi = np.inf if hi is None else float(hi)
        if lo > hi:
            raise ValueError(f"empty bounds for variable {j}")
        self.lower[j], self.upper[j] = lo, hi

    def copy(self) -> "LinProgram":
        lp = LinProgram(self.n)
        lp.eq_rows = list(self.eq_rows)
        lp.eq_rhs = list(self.eq_rhs)
        lp.ub_rows = list(self.ub_rows)
        lp.ub_rhs = list(self.ub_rhs)
        lp.objective = None if self.objective is None else self.objective.copy()
        lp.lower = self.lower.copy()
        lp.upper = self.upper.copy()
        return lp

    @property
    def tol(self) -> float:
        rhs = list(self.eq_rhs) + list(self.ub_rhs)
        rhs += [abs(v) for v in self.lower if math.isfinite(v)]
        rhs += [abs(v) for v in self.upper if math.isfinite(v)]
        big = max((abs(v) for v in rhs), default=0.0)
        return LP_REL_TOL * (1.0 + big)

    def violation(self, x) -> float:
        """Largest constraint violation of ``x`` (0 when feasible)."""
        x = np.asarray(x, float)
        worst = 0.0
        if self.eq_rows:
            worst = max(worst, float(np.abs(np.asarray(self.eq_rows) @ x - self.eq_rhs).max()))
        if self.ub_rows:
            worst = max(worst, float((np.asarray(self.ub_rows) @ x - self.ub_rhs).max()))
        worst = max(worst, float((self.lower - x).max()), float((x - self.upper).max()))
        return max(worst, 0.0)

    def to_lp_text(self) -> str:
        """Plain-text LP-format dump for cross-checking with external solvers."""

        def expr(a):
            terms = [f"{'-' if v < 0 else '+'} {abs(v):.17g} x{j}" for j, v in enumerate(a) if v != 0]
            s = " ".join(terms) if terms else "0 x0"
            return s[2:] if s.startswith("+ ") else s

        out = ["\\ strutforge debug dump", "Minimize"]
        c = self.objective if self.objective is not None else np.zeros(self.n)
        out.append(f" obj: {expr(c)}")
        out.append("Subject To")
        for k, (a, b) in enumerate(zip(self.eq_rows, self.eq_rhs)):
            out.append(f" e{k}: {expr(a)} = {b:.17g}")
        for k, (a, b) in enumerate(zip(self.ub_rows, self.ub_rhs)):
            out.append(f" u{k}: {expr(a)} <= {b:.17g}")
        out.append("Bounds")
        for j in range(self.n):
            lo, hi = self.lower[j], self.upper[j]
            if lo == -np.inf and hi == np.inf:
                out.append(f" x{j} free")
            else:
                ls = "-inf" if lo == -np.inf else f"{lo:.17g}"
                hs = "+inf" if hi == np.inf else f"{hi:.17g}"
                out.append(f" {ls} <= x{j} <= {hs}")
        out.append("End")
        return "\n".join(out) + "\n"


class _Infeasible(Exception):
    pass


class _Unbounded(Exception):
    pass


class SimplexSolver:
    """Single-use solver bound to one program; rows may be appended between solves."""

    def __init__(self, lp: LinProgram, max_iter: int | None = None):
        self.lp = lp
        self.max_iter = max_iter
        self.iterations = 0
        self._build_map()
        self.T: np.ndarray | None = None
        self.basis: list[int] = []
        self.A0 = np.zeros((0, self.ny))
        self.b0 = np.zeros(0)
        self._optimal = False
        self._last: LpOutcome | None = None

    # -- variable map: x = x0 + M y, y >= 0 -----------------------------------

    def _build_map(self) -> None:
        lp = self.lp
        cols: list[tuple[int, float]] = []
        x0 = np.zeros(lp.n)
        box: list[tuple[int, float]] = []
        for j in range(lp.n):
            lo, hi = lp.lower[j], lp.upper[j]
            if math.isfinite(lo):
                x0[j] = lo
                cols.append((j, 1.0))
                if math.isfinite(hi):
                    box.append((len(cols) - 1, hi - lo))
            elif math.isfinite(hi):
                x0[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        M = np.zeros((lp.n, len(cols)))
        for k, (j, s) in enumerate(cols):
            M[j, k] = s
        self.M, self.x0, self.box = M, x0, box
        self.ny = len(cols)

    def _std_rows(self, A: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return A @ self.M, b - A @ self.x0

    # -- tableau assembly -------------------------------------------------------

    def _assemble(self) -> None:
        lp = self.lp
        rows, rhs, kinds = [], [], []
        if lp.eq_rows:
            A, b = self._std_rows(np.asarray(lp.eq_rows), np.asarray(lp.eq_rhs))
            rows.append(A)
            rhs.append(b)
            kinds += ["eq"] * len(b)
        ub_A = list(lp.ub_rows)
        ub_b = list(lp.ub_rhs)
        if ub_A:
            A, b = self._std_rows(np.asarray(ub_A), np.asarray(ub_b))
            rows.append(A)
            rhs.append(b)
            kinds += ["le"] * len(b)
        for k, width in self.box:
            r = np.zeros((1, self.ny))
            r[0, k] = 1.0
            rows.append(r)
            rhs.append(np.array([width]))
            kinds.append("le")
        A = np.vstack(rows) if rows else np.zeros((0, self.ny))
        b = np.concatenate(rhs) if rhs else np.zeros(0)
        keep = []
        tol = self.lp.tol
        for i in range(len(b)):
            s = float(np.abs(A[i]).max()) if A.shape[1] else 0.0
            if s == 0.0:
                if (kinds[i] == "eq" and abs(b[i]) > tol) or (kinds[i] == "le" and b[i] < -tol):
                    raise _Infeasible
                continue
            A[i] /= s
            b[i] /= s
            keep.append(i)
        A, b = A[keep], b[keep]
        kinds = [kinds[i] for i in keep]
        ns = sum(1 for k in kinds if k == "le")
        m = len(b)
        S = np.zeros((m, ns))
        si = 0
        for i, k in enumerate(kinds):
            if k == "le":
                S[i, si] = 1.0
                si += 1
        A0 = np.hstack((A, S))
        b0 = b.copy()
        self.A0, self.b0 = A0, b0
        self.nslack = ns
        # initial basis: slack where rhs >= 0, artificial otherwise
        N = A0.shape[1]
        basis = [-1] * m
        si = 0
        for i, k in enumerate(kinds):
            if k == "le":
                if b0[i] >= 0:
                    basis[i] = self.ny + si
                si += 1
        art_rows = [i for i in range(m) if basis[i] < 0]
        na = len(art_rows)
        T = np.zeros((m + 1, N + na + 1))
        T[:m, :N] = A0
        T[:m, -1] = b0
        for i in art_rows:
            if b0[i] < 0:
                T[i] *= -1.0
        for k, i in enumerate(art_rows):
            T[i, N + k] = 1.0
            basis[i] = N + k
        self.T = np.ascontiguousarray(T)
        self.basis = basis
        self.N = N
        self.na = na
        # per tableau row: index in lp.ub_rows for appended cuts (else -1)
        # and its slack column (else -1)
        self.row_cut = [-1] * m
        self.row_slack = [-1] * m
        si = 0
        for i, k in enumerate(kinds):
            if k == "le":
                self.row_slack[i] = self.ny + si
                si += 1

    # -- pivoting ---------------------------------------------------------------

    def _budget(self) -> int:
        if self.max_iter is not None:
            return self.max_iter
        m, n = self.T.shape
        return 50 * (m + n) + 1000

    def _do_pivot(self, r: int, c: int) -> None:
        _pivot(self.T, r, c)
        self.basis[r] = c
        self.iterations += 1

    def _primal(self, ncols: int, dtol: float) -> None:
        """Primal simplex on columns ``< ncols`` using the last row as costs."""
        T = self.T
        m = T.shape[0] - 1
        bland = False
        degenerate = 0
        limit = self.iterations + self._budget()
        while True:
            if self.iterations > limit:
                raise SolverError("simplex iteration limit reached")
            z = T[m, :ncols]
            if bland:
                cand = np.flatnonzero(z < -dtol)
                if cand.size == 0:
                    return
                j = int(cand[0])
            else:
                j = int(np.argmin(z))
                if z[j] >= -dtol:
                    return
            col = T[:m, j]
            pos = np.flatnonzero(col > PIVOT_TOL)
            if pos.size == 0:
                raise _Unbounded
            rhs = np.maximum(T[pos, -1], 0.0)
            ratios = rhs / col[pos]
            best = ratios.min()
            ties = pos[ratios <= best + 1e-12 * (1.0 + best)]
            if bland:
                r = int(min(ties, key=lambda i: self.basis[i]))
            else:
                r = int(ties[np.argmax(col[ties])])
            if best <= 1e-13:
                degenerate += 1
                if degenerate > _DEGENERATE_RUN:
                    bland = True
            else:
                degenerate = 0
                bland = False
            self._do_pivot(r, j)

    def _dual(self, ftol: float) -> None:
        """Dual simplex until every basic value is non-negative."""
        T = self.T
        m = T.shape[0] - 1
        N = T.shape[1] - 1
        bland = False
        stall = 0
        limit = self.iterations + self._budget()
        while True:
            if self.iterations > limit:
                raise SolverError("dual simplex iteration limit reached")
            rhs = T[:m, -1]
            neg = np.flatnonzero(rhs < -ftol)
            if neg.size == 0:
                return
            if bland:
                r = int(min(neg, key=lambda i: self.basis[i]))
            else:
                r = int(neg[np.argmin(rhs[neg])])
            row = T[r, :N]
            cand = np.flatnonzero(row < -PIVOT_TOL)
            if cand.size == 0:
                raise _Infeasible
            z = np.maximum(T[m, cand], 0.0)
            ratios = z / -row[cand]
            best = ratios.min()
            ties = cand[ratios <= best + 1e-12 * (1.0 + best)]
            if bland:
                j = int(ties[0])
            else:
                j = int(ties[np.argmax(-row[ties])])
            if best <= 1e-13:
                stall += 1
                if stall > _DEGENERATE_RUN:
                    bland = True
            else:
                stall = 0
            self._do_pivot(r, j)

    # -- phases -----------------------------------------------------------------

    def _phase1(self) -> None:
        T = self.T
        m = T.shape[0] - 1
        N = self.N
        if self.na == 0:
            return
        T[m] = 0.0
        art = [i for i in range(m) if self.basis[i] >= N]
        T[m] -= T[art].sum(axis=0)
        T[m, N:-1] = 0.0
        self._primal(N + self.na, 1e-11)
        if -T[m, -1] > 1e-9 * (1.0 + float(np.abs(self.b0).max(initial=0.0))):
            raise _Infeasible
        # drive remaining artificials out of the basis
        drop = []
        for i in range(m):
            if self.basis[i] >= N:
                row = T[i, :N]
                j = int(np.argmax(np.abs(row)))
                if abs(row[j]) > 1e-9:
                    self._do_pivot(i, j)
                else:
                    drop.append(i)
        if drop:
            keep = [i for i in range(m) if i not in drop]
            self.basis = [self.basis[i] for i in keep]
            self.A0 = self.A0[keep]
            self.b0 = self.b0[keep]
            self.row_cut = [self.row_cut[i] for i in keep]
            self.row_slack = [self.row_slack[i] for i in keep]
            T = T[keep + [m]]
        self.T = np.ascontiguousarray(np.hstack((T[:, :N], T[:, -1:])))
        self.na = 0

    def _cost_vector(self) -> np.ndarray:
        c = np.zeros(self.N)
        if self.lp.objective is not None:
            c[: self.ny] = self.lp.objective @ self.M
        return c

    def _set_costs(self) -> None:
        T = self.T
        m = T.shape[0] - 1
        c = self._cost_vector()
        T[m, :-1] = c
        T[m, -1] = 0.0
        for i, j in enumerate(self.basis):
            if c[j] != 0.0:
                T[m] -= c[j] * T[i]

    def _dtol(self) -> float:
        c = self.lp.objective
        s = float(np.abs(c).max()) if c is not None and c.size else 0.0
        return 1e-9 * max(1.0, s)

    # -- solution extraction ----------------------------------------------------

    def _tableau_x(self) -> np.ndarray:
        m = self.T.shape[0] - 1
        y = np.zeros(self.N)
        y[self.basis] = np.maximum(self.T[:m, -1], 0.0)
        return self.x0 + self.M @ y[: self.ny]

    def _reinvert(self) -> bool:
        """Rebuild the tableau from the original rows and the current basis."""
        m = self.T.shape[0] - 1
        if not m:
            return True
        B = self.A0[:, self.basis]
        try:
            body = np.linalg.solve(B, np.column_stack((self.A0, self.b0)))
        except np.linalg.LinAlgError:
            return False
        self.T[:m, : self.N] = body[:, :-1]
        self.T[:m, -1] = body[:, -1]
        self._set_costs()
        return True

    def _primal_point(self) -> np.ndarray:
        x = self._tableau_x()
        v = self.lp.violation(x)
        if v <= self.lp.tol:
            return x
        # accumulated round-off: refactor from the original rows and re-optimize
        log.debug("tableau point off by %.3g; reinverting", v)
        if self._reinvert():
            bscale = 1.0 + float(np.abs(self.b0).max(initial=0.0))
            self._dual(1e-11 * bscale)
            self._primal(self.N, self._dtol())
            x2 = self._tableau_x()
            v2 = self.lp.violation(x2)
            if v2 < v:
                x, v = x2, v2
        if v > self.lp.tol:
            raise SolverError(f"witness violates constraints by {v:.3g}")
        return x

    def _outcome(self) -> LpOutcome:
        x = self._primal_point()
        obj = None
        if self.lp.objective is not None:
            obj = float(self.lp.objective @ x)
        self._optimal = True
        out = LpOutcome(LpStatus.FEASIBLE, x, obj, self.iterations)
        self._last = out
        return out

    # -- public -----------------------------------------------------------------

    def solve(self) -> LpOutcome:
        """Solve from scratch."""
        self._optimal = False
        try:
            self._assemble()
            self._phase1()
            self._set_costs()
            self._primal(self.N, self._dtol())
            return self._outcome()
        except _Infeasible:
            return self._finish(LpStatus.INFEASIBLE)
        except _Unbounded:
            return self._finish(LpStatus.UNBOUNDED)

    def _finish(self, status: LpStatus) -> LpOutcome:
        self._optimal = False
        out = LpOutcome(status, iterations=self.iterations)
        self._last = out
        return out

    def add_rows(self, A, b) -> None:
        """Append ``A x <= b`` rows to the program (and the live tableau)."""
        A = np.atleast_2d(np.asarray(A, float))
        b = np.atleast_1d(np.asarray(b, float))
        first = len(self.lp.ub_rows)
        for a, v in zip(A, b):
            self.lp.add_le(a, v)
        if not self._optimal or self.T is None:
            return
        Ay, by = self._std_rows(A, b)
        scale = np.abs(Ay).max(axis=1)
        ok = scale > 0
        ids = first + np.arange(len(b))
        if not np.all(ok):
            if np.any(by[~ok] < -self.lp.tol):
                self._optimal = False
                self._infeasible_rows = True
                return
            Ay, by, scale, ids = Ay[ok], by[ok], scale[ok], ids[ok]
        Ay /= scale[:, None]
        by /= scale
        k = len(by)
        if k == 0:
            return
        T = self.T
        m = T.shape[0] - 1
        N = self.N
        newT = np.zeros((m + k + 1, N + k + 1))
        newT[:m, :N] = T[:m, :N]
        newT[:m, -1] = T[:m, -1]
        newT[-1, :N] = T[m, :N]
        newT[-1, -1] = T[m, -1]
        rows = np.zeros((k, N + k + 1))
        rows[:, : self.ny] = Ay
        rows[:, N : N + k] = np.eye(k)
        rows[:, -1] = by
        # express the new rows in the current basis (T has unit basic columns)
        bcols = np.asarray(self.basis, int)
        F = rows[:, bcols].copy()
        rows -= F @ newT[:m]
        rows[:, bcols] = 0.0
        newT[m : m + k] = rows
        self.T = np.ascontiguousarray(newT)
        self.basis += list(range(N, N + k))
        A0 = np.zeros((self.A0.shape[0] + k, N + k))
        A0[: self.A0.shape[0], :N] = self.A0
        A0[self.A0.shape[0] :, : self.ny] = Ay
        A0[self.A0.shape[0] :, N:] = np.eye(k)
        self.A0 = A0
        self.b0 = np.concatenate((self.b0, by))
        self.N = N + k
        self.row_cut += [int(i) for i in ids]
        self.row_slack += list(range(N, N + k))

    def purge(self, slack_tol: float | None = None) -> int:
        """Drop appended rows that are strictly slack at the current basis.

        Such a row's own slack is basic, so the row and that column can be
        deleted without touching the rest of the tableau.  The rows leave the
        program as well; lazy separation re-adds them if they are violated
        later.  Returns the number of rows removed.
        """
        if not self._optimal or self.T is None:
            return 0
        T = self.T
        m = T.shape[0] - 1
        tol = self.lp.tol if slack_tol is None else slack_tol
        rows, cols = [], []
        for r in range(m):
            if self.row_cut[r] >= 0 and self.basis[r] == self.row_slack[r] and T[r, -1] > tol:
                rows.append(r)
                cols.append(self.row_slack[r])
        if not rows:
            return 0
        drop_r = set(rows)
        keep_r = [r for r in range(m) if r not in drop_r]
        self.T = np.ascontiguousarray(np.delete(np.delete(T, rows, axis=0), cols, axis=1))
        self.A0 = np.delete(np.delete(self.A0, rows, axis=0), cols, axis=1)
        self.b0 = np.delete(self.b0, rows)
        cols_sorted = np.sort(np.asarray(cols))

        def moved(j):
            return j - int(np.searchsorted(cols_sorted, j)) if j >= 0 else -1

        self.basis = [moved(self.basis[r]) for r in keep_r]
        self.row_slack = [moved(self.row_slack[r]) for r in keep_r]
        gone = sorted(self.row_cut[r] for r in rows)
        goneset = set(gone)
        self.lp.ub_rows = [a for i, a in enumerate(self.lp.ub_rows) if i not in goneset]
        self.lp.ub_rhs = [v for i, v in enumerate(self.lp.ub_rhs) if i not in goneset]
        cut = np.asarray([self.row_cut[r] for r in keep_r])
        shift = np.searchsorted(np.asarray(gone), cut, side="left")
        self.row_cut = [int(c - sh) if c >= 0 else -1 for c, sh in zip(cut, shift)]
        keep_c = self.N - len(cols)
        self.N = keep_c
        return len(rows)

    def resolve(self) -> LpOutcome:
        """Re-optimize after ``add_rows``; warm-started when possible."""
        if getattr(self, "_infeasible_rows", False):
            return self._finish(LpStatus.INFEASIBLE)
        if not self._optimal:
            if self._last is not None and self._last.status is LpStatus.INFEASIBLE:
                return self._last
            return self.solve()
        bscale = 1.0 + float(np.abs(self.b0).max(initial=0.0))
        try:
            self._dual(1e-11 * bscale)
            self._primal(self.N, self._dtol())
        except _Infeasible:
            return self._finish(LpStatus.INFEASIBLE)
        except _Unbounded:
            return self._finish(LpStatus.UNBOUNDED)
        try:
            return self._outcome()
        except (SolverError, _Infeasible, _Unbounded):
            log.debug("warm start lost accuracy; solving from scratch")
            return self.solve()


def solve_feasibility(lp: LinProgram) -> LpOutcome:
    """Feasible (with a verified witness) or Infeasible; objective ignored."""
    q = lp.copy()
    q.objective = None
    return SimplexSolver(q).solve()


def solve_min(lp: LinProgram) -> LpOutcome:
    if lp.objective is None:
        raise ValueError("objective required")
    return SimplexSolver(lp.copy()).solve()


def solve_with_cuts(
    lp: LinProgram,
    separate: Callable[[np.ndarray], tuple[Sequence, Sequence]],
    max_rounds: int = 200,
) -> LpOutcome:
    """Lazy constraint generation.

    ``separate(x)`` returns rows ``(A, b)`` of ``A x <= b`` violated by ``x``;
    an empty return ends the loop.
    """
    solver = SimplexSolver(lp.copy())
    out = solver.solve()
    for _ in range(max_rounds):
        if not out.feasible:
            return out
        A, b = separate(out.x)
        if len(b) == 0:
            return out
        solver.add_rows(A, b)
        out = solver.resolve()
    raise SolverError("cut generation did not converge")
