import math

import numpy as np
import pytest

from strutforge.equilibrium import EquilibriumError, ForceSystem
from strutforge.geometry import Segment, segment_crosses_interior
from strutforge.lpsolve import LpStatus
from strutforge.synthesis import (
    Obstacle,
    SupportSegment,
    approximate_shape,
    avoid_multi,
    avoid_single,
    discretize_supports,
    quick_infeasibility,
    solve_reactive,
)

from conftest import INWARD, SQUARE, square_obstacle


def assert_avoids(net, obstacles, tol=1e-9):
    for ob in obstacles:
        for a, b in net.edges:
            assert not segment_crosses_interior(net.nodes[a], net.nodes[b], ob.polygon, tol)


def test_square_with_central_obstacle():
    fs = ForceSystem(SQUARE, INWARD)
    ob = square_obstacle((0.5, 0.5), 0.1)
    res = avoid_single(fs, ob)
    assert res.status is LpStatus.FEASIBLE
    net = res.net
    assert net.max_residual() <= 1e-9
    assert net.forces.min() >= -1e-9
    assert net.loop_count() == 1
    assert_avoids(net, [ob])
    # the obstacle sits below its cleaving plane
    L = res.cleaving[0]
    assert np.all(L(ob.vertices) <= res.envelope(ob.vertices) + 1e-9)


def test_single_and_multi_agree():
    fs = ForceSystem(SQUARE, INWARD)
    ob = square_obstacle((0.5, 0.5), 0.1)
    a = avoid_single(fs, ob)
    b = avoid_multi(fs, [ob])
    assert a.status is b.status
    assert a.cleaving[0].as_tuple() == pytest.approx(b.cleaving[0].as_tuple())


def test_two_obstacles():
    fs = ForceSystem(SQUARE, INWARD)
    obs = [square_obstacle((0.5, 0.3), 0.05), square_obstacle((0.5, 0.7), 0.05)]
    res = avoid_multi(fs, obs)
    assert res.feasible
    assert_avoids(res.net, obs)
    assert res.net.max_residual() <= 1e-9


def test_obstacle_sticking_out_is_infeasible():
    fs = ForceSystem(SQUARE, INWARD)
    ob = Obstacle.from_points([[0.1, -0.1], [0.4, 0.2], [0.2, 0.4], [-0.1, 0.1]])
    assert quick_infeasibility(fs, ob)
    assert avoid_single(fs, ob).status is LpStatus.INFEASIBLE


def test_quick_test_needs_both_conditions():
    fs = ForceSystem(SQUARE, INWARD)
    inside = square_obstacle((0.5, 0.5), 0.1)
    assert not quick_infeasibility(fs, inside)
    outside_only = Obstacle.from_points([[0.4, -0.2], [0.6, -0.2], [0.5, -0.05]])
    assert not quick_infeasibility(fs, outside_only)


def test_non_compressible_rejected():
    fs = ForceSystem(SQUARE, -INWARD)
    with pytest.raises(EquilibriumError):
        avoid_single(fs, square_obstacle((0.5, 0.5), 0.1))


def test_non_convex_obstacle_uses_hull(caplog):
    ob = Obstacle.from_points([[0, 0], [1, 0], [0.5, 0.2], [1, 1], [0, 1]], label="dent")
    assert ob.hull_replaced
    assert len(ob.vertices) == 4
    assert "convex hull" in caplog.text


def test_discretize_supports_order():
    sup = [SupportSegment(Segment((-4.0, 0.0), (-3.0, 0.0)), 5), SupportSegment(Segment((3.0, 0.0), (4.0, 0.0)), 5)]
    fs = discretize_supports([((0.0, 4.0), (0.0, -1.0))], sup)
    assert fs.n == 11
    assert len(fs.reactive) == 10
    assert np.allclose(fs.points[0], [0, 4])
    assert fs.orientation in (1, -1)


def test_reactive_open_net_for_single_load():
    sup = [SupportSegment(Segment((-4.0, 0.0), (-3.0, 0.0)), 3), SupportSegment(Segment((3.0, 0.0), (4.0, 0.0)), 3)]
    fs = discretize_supports([((0.0, 4.0), (0.0, -1.0))], sup)
    res = solve_reactive(fs)
    assert res.feasible
    net = res.net
    assert net.max_residual() <= 1e-9 * 10
    assert net.forces.min() >= -1e-9
    total = sum(res.reactive_forces.values())
    assert np.allclose(total, [0, 1], atol=1e-9)
    # minimum weight: two struts from the load straight to the inner support ends
    assert res.objective_value == pytest.approx(2 * 0.5 * (9 + 16) / 4, rel=1e-6)


def test_reactive_with_obstacle():
    sup = [SupportSegment(Segment((-4.0, 0.0), (-3.0, 0.0)), 4), SupportSegment(Segment((3.0, 0.0), (4.0, 0.0)), 4)]
    fs = discretize_supports([((0.0, 4.0), (0.0, -1.0))], sup)
    ob = approximate_shape("circle", 12, (0.0, 1.5), 0.6)
    res = solve_reactive(fs, [ob])
    assert res.feasible
    assert res.net.forces.min() >= -1e-6
    assert_avoids(res.net, [ob], tol=1e-7)
    assert res.gammas[0] is not None


def test_reactive_infeasible():
    # an obstacle covering the load point cannot be avoided
    sup = [SupportSegment(Segment((-4.0, 0.0), (-3.0, 0.0)), 3), SupportSegment(Segment((3.0, 0.0), (4.0, 0.0)), 3)]
    fs = discretize_supports([((0.0, 4.0), (0.0, -1.0))], sup)
    ob = approximate_shape("circle", 12, (0.0, 3.8), 0.5)
    res = solve_reactive(fs, [ob])
    assert res.status is LpStatus.INFEASIBLE


def test_arch_reactions_are_funicular():
    pts = [[8.3, 0.0]]
    for k in range(-4, 5):
        a = math.pi / 2 + k * math.pi / 20
        pts.append([9 * math.cos(a), 9 * math.sin(a)])
    pts.append([-8.3, 0.0])
    forces = [None] + [[0.0, -1.0]] * 9 + [None]
    fs = ForceSystem(pts, forces, reactive=[0, 10])
    res = solve_reactive(fs)
    assert res.feasible
    t0, t10 = res.reactive_forces[0], res.reactive_forces[10]
    assert t0[1] == pytest.approx(4.5) and t10[1] == pytest.approx(4.5)
    assert t0[0] == pytest.approx(-t10[0])
    assert res.net.loop_count() == 0


def test_cleave_objective_outside_hull_reports_reason():
    from strutforge.lpsolve import SolverError

    sup = [SupportSegment(Segment((-4.0, 0.0), (-3.0, 0.0)), 3), SupportSegment(Segment((3.0, 0.0), (4.0, 0.0)), 3)]
    fs = discretize_supports([((0.0, 4.0), (0.0, -1.0))], sup)
    ob = Obstacle.from_points([[1, 2], [3, 2], [3, 3]])
    with pytest.raises(SolverError, match="outside the hull"):
        solve_reactive(fs, [ob], ("cleave", 0))
