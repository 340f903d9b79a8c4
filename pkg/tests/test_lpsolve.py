import numpy as np
import pytest
from scipy.optimize import linprog

from strutforge.lpsolve import (
    LinProgram,
    LpStatus,
    SimplexSolver,
    solve_feasibility,
    solve_min,
    solve_with_cuts,
)


def test_small_min():
    # min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2)
    lp = LinProgram(2)
    lp.add_le([1, 2], 4)
    lp.add_le([3, 1], 6)
    lp.set_bounds(0, 0)
    lp.set_bounds(1, 0)
    lp.set_objective([-1, -1])
    out = solve_min(lp)
    assert out.status is LpStatus.FEASIBLE
    assert np.allclose(out.x, [1.6, 1.2])
    assert out.objective == pytest.approx(-2.8)
    assert lp.violation(out.x) <= lp.tol


def test_equality_and_free_variables():
    lp = LinProgram(3)
    lp.add_eq([1, 1, 1], 1)
    lp.add_eq([1, -1, 0], 0.5)
    lp.set_objective([0, 0, 1])
    lp.set_bounds(2, -2, 3)
    out = solve_min(lp)
    assert out.feasible
    assert out.x[2] == pytest.approx(-2)
    assert lp.violation(out.x) <= lp.tol


def test_infeasible_and_unbounded():
    lp = LinProgram(1)
    lp.add_le([1], 1)
    lp.add_ge([1], 2)
    assert solve_feasibility(lp).status is LpStatus.INFEASIBLE
    assert not solve_feasibility(lp)
    lp = LinProgram(2)
    lp.add_le([1, -1], 0)
    lp.set_objective([-1, 0])
    assert solve_min(lp).status is LpStatus.UNBOUNDED


def test_bad_rows_rejected():
    lp = LinProgram(2)
    with pytest.raises(ValueError):
        lp.add_le([1, 2, 3], 0)
    with pytest.raises(ValueError):
        lp.add_le([1, np.nan], 0)
    with pytest.raises(ValueError):
        lp.set_bounds(0, 2, 1)
    with pytest.raises(ValueError):
        LinProgram(0)


def test_degenerate_cycling_example():
    # Beale's example cycles under plain Dantzig pricing with naive ties
    lp = LinProgram(4)
    lp.add_le([0.25, -60, -0.04, 9], 0)
    lp.add_le([0.5, -90, -0.02, 3], 0)
    lp.add_le([0, 0, 1, 0], 1)
    for j in range(4):
        lp.set_bounds(j, 0)
    lp.set_objective([-0.75, 150, -0.02, 6])
    out = solve_min(lp)
    assert out.feasible
    assert out.objective == pytest.approx(-0.05)


def test_warm_start_matches_cold_solve():
    rng = np.random.default_rng(5)
    n = 6
    lp = LinProgram(n)
    for _ in range(8):
        lp.add_le(rng.normal(size=n), rng.uniform(1, 3))
    for j in range(n):
        lp.set_bounds(j, -5, 5)
    lp.set_objective(rng.normal(size=n))
    solver = SimplexSolver(lp.copy())
    first = solver.solve()
    assert first.feasible
    A = rng.normal(size=(4, n))
    b = rng.uniform(0.2, 1, 4)
    solver.add_rows(A, b)
    warm = solver.resolve()
    for a, v in zip(A, b):
        lp.add_le(a, v)
    cold = solve_min(lp)
    assert warm.status is cold.status
    assert warm.objective == pytest.approx(cold.objective, rel=1e-7, abs=1e-9)
    assert lp.violation(warm.x) <= lp.tol


def test_purge_keeps_optimum():
    rng = np.random.default_rng(8)
    n = 4
    lp = LinProgram(n)
    for j in range(n):
        lp.set_bounds(j, -1, 1)
    lp.set_objective(rng.normal(size=n))
    solver = SimplexSolver(lp.copy())
    solver.solve()
    # loose cuts are slack at the optimum and may be purged
    solver.add_rows(np.eye(n), np.full(n, 10.0))
    before = solver.resolve()
    dropped = solver.purge()
    assert dropped >= 1
    after = solver.resolve()
    assert after.objective == pytest.approx(before.objective)


def test_cut_loop():
    # minimize -x - y over the unit disk given lazily by tangent cuts
    lp = LinProgram(2)
    lp.set_bounds(0, -2, 2)
    lp.set_bounds(1, -2, 2)
    lp.set_objective([-1, -1])

    def separate(x):
        r = np.hypot(*x)
        if r <= 1 + 1e-9:
            return [], []
        return [x / r], [1.0]

    out = solve_with_cuts(lp, separate, max_rounds=500)
    assert out.feasible
    assert out.objective == pytest.approx(-np.sqrt(2), abs=1e-6)


def test_lp_text_dump():
    lp = LinProgram(2)
    lp.add_eq([1, -1], 0)
    lp.add_le([1, 1], 2)
    lp.set_bounds(0, 0)
    text = lp.to_lp_text()
    assert "Minimize" in text and "Subject To" in text and text.endswith("End\n")
    assert " x1 free" in text
    assert "e0: 1 x0 - 1 x1 = 0" in text


@pytest.mark.parametrize("seed", range(40))
def test_against_scipy(seed):
    """Feasibility verdict and optimum agree with HiGHS on random programs."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 10))
    A = rng.normal(size=(m, n))
    b = rng.normal(size=m)
    c = rng.normal(size=n)
    E = rng.normal(size=(1, n)) if seed % 3 == 0 else None
    e = rng.normal(size=1) if E is not None else None
    lo, hi = -3.0, 3.0
    lp = LinProgram(n)
    for a, v in zip(A, b):
        lp.add_le(a, v)
    if E is not None:
        lp.add_eq(E[0], e[0])
    for j in range(n):
        lp.set_bounds(j, lo, hi)
    lp.set_objective(c)
    ours = solve_min(lp)
    ref = linprog(c, A_ub=A, b_ub=b, A_eq=E, b_eq=e, bounds=[(lo, hi)] * n, method="highs")
    assert ours.feasible == (ref.status == 0)
    if ours.feasible:
        assert ours.objective == pytest.approx(ref.fun, rel=1e-7, abs=1e-8)
        assert lp.violation(ours.x) <= lp.tol
