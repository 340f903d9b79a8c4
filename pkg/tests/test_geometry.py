import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strutforge.geometry import (
    ConvexPolygon,
    GeometryError,
    PlaneFunc,
    Segment,
    as_points,
    convex_hull,
    convex_orientation,
    is_ccw_convex,
    point_segment_distance,
    polygon_area,
    polygon_centroid,
    rot90,
    segment_crosses_interior,
    segments_cross,
)
from strutforge.synthesis import approximate_shape

from conftest import SQUARE

coord = st.floats(-10, 10, allow_nan=False)


def test_rot90_and_plane_arithmetic():
    assert np.allclose(rot90([1.0, 2.0]), [-2.0, 1.0])
    L = PlaneFunc(1, 2, 3)
    M = PlaneFunc(-1, 0, 0.5)
    assert (L + M).as_tuple() == (0.0, 2.0, 3.5)
    assert (L - M)(np.array([1.0, 1.0])) == pytest.approx(L(np.array([1.0, 1.0])) - M(np.array([1.0, 1.0])))
    assert (2 * L).as_tuple() == (2.0, 4.0, 6.0)
    assert L.shifted(-3).c == 0.0
    assert L.to_dict() == {"v": [1.0, 2.0], "c": 3.0}


def test_plane_through_three_points():
    L = PlaneFunc.through([[0, 0], [1, 0], [0, 1]], [1, 3, 0])
    assert L.as_tuple() == pytest.approx((2.0, -1.0, 1.0))
    with pytest.raises(GeometryError):
        PlaneFunc.through([[0, 0], [1, 1], [2, 2]], [0, 0, 0])


def test_nonfinite_input_rejected():
    with pytest.raises(GeometryError):
        as_points([[0, 0], [np.nan, 1]])
    with pytest.raises(GeometryError):
        PlaneFunc(np.inf, 0, 0)


def test_orientation():
    assert is_ccw_convex(SQUARE)
    assert convex_orientation(SQUARE) == 1
    assert convex_orientation(SQUARE[::-1]) == -1
    # a dart is not convex in either direction
    dart = np.array([[0, 0], [2, 1], [0, 2], [0.5, 1]])
    assert convex_orientation(dart) == 0
    # collinear runs are fine (weak convexity)
    weak = np.array([[0, 0], [0.5, 0], [1, 0], [1, 1], [0, 1]])
    assert convex_orientation(weak) == 1


def test_hull_and_area():
    pts = np.array([[0, 0], [1, 0], [0.5, 0.2], [1, 1], [0, 1], [0.3, 0.6]])
    H = convex_hull(pts)
    assert len(H.vertices) == 4
    assert H.area == pytest.approx(1.0)
    assert np.allclose(H.centroid, [0.5, 0.5])
    assert polygon_area(SQUARE[::-1]) == pytest.approx(-1.0)
    assert np.allclose(polygon_centroid(SQUARE), [0.5, 0.5])


def test_polygon_clip_and_contains():
    P = ConvexPolygon(SQUARE)
    # keep x <= 0.25:  x - 0.25 <= 0
    Q = P.clip(1.0, 0.0, -0.25)
    assert Q.area == pytest.approx(0.25)
    assert P.contains([0.5, 0.5], strict=True)
    assert P.contains([1.0, 0.5])
    assert not P.contains([1.0, 0.5], strict=True)
    assert P.clip(1.0, 0.0, 5.0) is None


def test_segment_crossing():
    P = ConvexPolygon(SQUARE)
    assert segment_crosses_interior([-1, 0.5], [2, 0.5], P)
    # running along an edge does not enter the interior
    assert not segment_crosses_interior([-1, 0.0], [2, 0.0], P)
    assert not segment_crosses_interior([2, 2], [3, 3], P)
    x = segments_cross([0, 0], [1, 1], [0, 1], [1, 0], 1e-12)
    assert np.allclose(x, [0.5, 0.5])
    assert segments_cross([0, 0], [1, 0], [0, 1], [1, 1], 1e-12) is None
    assert point_segment_distance([0.5, 1.0], [0, 0], [1, 0]) == pytest.approx(1.0)
    assert Segment(np.array([0.0, 0.0]), np.array([3.0, 4.0])).length == pytest.approx(5.0)
    assert np.allclose(Segment(np.array([0.0, 0.0]), np.array([1.0, 0.0])).points(3), [[0, 0], [0.5, 0], [1, 0]])


@pytest.mark.parametrize("kind,kw", [
    ("circle", dict(radius=1.3)),
    ("ellipse", dict(semi_axes=(0.25, 0.4), angle=0.3)),
    ("half-disk", dict(radius=2.9)),
])
def test_circumscribed_shapes_contain_the_curve(kind, kw):
    ob = approximate_shape(kind, 21, (0.5, -0.2), **kw)
    c = np.array([0.5, -0.2])
    t = np.linspace(0, 2 * np.pi, 400)
    if kind == "circle":
        curve = c + kw["radius"] * np.c_[np.cos(t), np.sin(t)]
    elif kind == "ellipse":
        a, b = kw["semi_axes"]
        r = np.array([[math.cos(0.3), -math.sin(0.3)], [math.sin(0.3), math.cos(0.3)]])
        curve = c + (np.c_[a * np.cos(t), b * np.sin(t)]) @ r.T
    else:
        t = np.linspace(0, np.pi, 400)
        curve = c + kw["radius"] * np.c_[np.cos(t), np.sin(t)]
    P = ob.polygon
    assert all(P.contains(p, tol=1e-9) for p in curve)
    if kind == "half-disk":
        assert len(ob.vertices) == 21


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(coord, coord), min_size=3, max_size=30, unique=True))
def test_hull_contains_inputs(pts):
    pts = np.array(pts)
    try:
        H = convex_hull(pts)
    except GeometryError:
        return  # collinear input
    assert H.area >= 0
    assert all(H.contains(p, tol=1e-7) for p in pts)
    assert is_ccw_convex(H.vertices)
