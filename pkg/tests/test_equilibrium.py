import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strutforge.equilibrium import (
    EquilibriumError,
    ForceSystem,
    balance_residual,
    check_balance,
    check_compressibility,
    concavity_margins,
    tangent_planes,
    torque_sums,
)
from strutforge.geometry import GeometryError, rot90

from conftest import INWARD, SQUARE, random_balanced, random_compressible


def planes_by_solve(X, F):
    """Oracle: planes from the jump conditions as one linear system.

    Unknowns ``(w_k, d_k)`` for k = 0..n-1 with ``L_0 = 0``; at each point
    ``x_i`` the plane of the next edge equals the previous one plus the
    rotated force, in gradient and in value.
    """
    n = len(X)
    A = np.zeros((3 * n + 3, 3 * n))
    b = np.zeros(3 * n + 3)
    r = 0
    for i in range(n):
        k0, k1 = i, (i + 1) % n
        j = rot90(F[i])
        for comp in range(2):
            A[r, 3 * k1 + comp] = 1
            A[r, 3 * k0 + comp] = -1
            b[r] = j[comp]
            r += 1
        # values agree at x_i
        A[r, 3 * k1 : 3 * k1 + 2] = X[i]
        A[r, 3 * k1 + 2] = 1
        A[r, 3 * k0 : 3 * k0 + 2] -= X[i]
        A[r, 3 * k0 + 2] -= 1
        r += 1
    A[r : r + 3, 0:3] = np.eye(3)
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    # row k is the plane of the edge ending at x_k, as in the library
    return sol.reshape(n, 3)


def test_inward_square_planes():
    fs = ForceSystem(SQUARE, INWARD)
    tp = tangent_planes(fs)
    got = [p.as_tuple() for p in tp.planes]
    expected = [(0, 0, 0), (-1, 1, 0), (-2, 0, 1), (-1, -1, 1)]
    assert np.allclose(got, expected, atol=1e-12)
    assert check_balance(fs)
    assert check_compressibility(fs)


def test_inward_square_matches_oracle():
    fs = ForceSystem(SQUARE, INWARD)
    ref = planes_by_solve(SQUARE, INWARD)
    got = np.array([p.as_tuple() for p in tangent_planes(fs).planes])
    assert np.allclose(got, ref, atol=1e-12)


def test_outward_square_not_compressible():
    fs = ForceSystem(SQUARE, -INWARD)
    assert check_balance(fs)
    assert not check_compressibility(fs)


def test_clockwise_listing_reads_forces_reversed():
    cw = ForceSystem(SQUARE[::-1], -INWARD[::-1])
    assert cw.orientation == -1
    assert np.allclose(cw.loads, INWARD[::-1])
    assert check_compressibility(cw)


def test_unbalanced_rejected():
    F = INWARD.copy()
    F[0] += [0.5, 0]
    fs = ForceSystem(SQUARE, F)
    assert not check_balance(fs)
    with pytest.raises(EquilibriumError):
        tangent_planes(fs)


def test_bad_inputs():
    with pytest.raises(GeometryError):
        ForceSystem(SQUARE[:2], INWARD[:2])
    with pytest.raises(EquilibriumError):
        ForceSystem(SQUARE, INWARD[:3])
    with pytest.raises(EquilibriumError):
        ForceSystem(SQUARE, [INWARD[0], None, INWARD[2], INWARD[3]])
    with pytest.raises(GeometryError):
        ForceSystem(SQUARE[[0, 2, 1, 3]], INWARD)
    fs = ForceSystem(SQUARE, [INWARD[0], None, INWARD[2], INWARD[3]], reactive=[1])
    with pytest.raises(EquilibriumError):
        balance_residual(fs)


def test_torque_sums_square():
    S = torque_sums(ForceSystem(SQUARE, INWARD))
    assert np.allclose(S[:, :3], [[0, -1, -1]] * 4)


def test_two_routes_agree_on_random_systems():
    rng = np.random.default_rng(7)
    for _ in range(50):
        X, F = random_balanced(rng, int(rng.integers(3, 11)))
        fs = ForceSystem(X, F)
        tp = tangent_planes(fs)
        M = concavity_margins(tp)
        S = torque_sums(fs)
        n = fs.n
        for i in range(n):
            for m in range(n - 1):
                j = (i + m + 1) % n
                assert M[i, j] == pytest.approx(-S[i, m], abs=1e-9 * fs.moment_scale)


def test_planes_continuous_at_points():
    rng = np.random.default_rng(3)
    fs = random_compressible(rng, 8)
    tp = tangent_planes(fs)
    n = fs.n
    for i in range(n):
        a = tp.planes[i](fs.points[i])
        b = tp.planes[(i + 1) % n](fs.points[i])
        assert a == pytest.approx(b, abs=1e-9 * fs.moment_scale)


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 10), st.integers(0, 2**31 - 1), st.floats(-3, 3), st.floats(-5, 5), st.floats(-5, 5))
def test_rigid_motion_invariance(n, seed, theta, dx, dy):
    rng = np.random.default_rng(seed)
    X, F = random_balanced(rng, n)
    fs = ForceSystem(X, F)
    R = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    moved = fs.transformed(R).translated([dx, dy])
    assert check_balance(moved)
    a = check_compressibility(fs)
    b = check_compressibility(moved)
    M = concavity_margins(tangent_planes(fs))
    np.fill_diagonal(M, np.inf)
    # away from the boundary of the cone the verdict cannot change
    if abs(M.min()) > 1e-6 * fs.moment_scale:
        assert a == b
