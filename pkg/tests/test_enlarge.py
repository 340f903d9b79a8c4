import numpy as np
import pytest

from strutforge.enlarge import (
    CleavingContext,
    InadmissiblePlaneError,
    is_maximal,
    lower_plane,
    roll_from,
    roll_maximal_regions,
    seed_plane,
    tilt_plane,
    touching_sequence,
)
from strutforge.equilibrium import ForceSystem
from strutforge.geometry import GeometryError, PlaneFunc

from conftest import INWARD, SQUARE, load_fixture, random_compressible


def seven():
    d = load_fixture("seven_forces.json")
    return ForceSystem(d["points"], d["forces"], bal_tol=d["tolerances"]["bal"])


def test_seven_force_roll_sequence():
    ctx = CleavingContext.from_force_system(seven())
    seq = touching_sequence(roll_from(ctx, 0))
    assert seq == [(1, 2, 3), (1, 3, 4), (1, 4, 6), (1, 6, 7)]


def test_seven_force_regions_maximal():
    ctx = CleavingContext.from_force_system(seven())
    states = roll_maximal_regions(ctx)
    assert len(states) >= 4
    for st in states:
        assert len(st.touching) >= 2
        assert ctx.gaps(st.plane).min() >= -ctx.tol
        assert is_maximal(ctx, st)


def test_lower_then_tilt_on_square():
    ctx = CleavingContext.from_force_system(ForceSystem(SQUARE, INWARD))
    # support heights of the inward square are all zero; a high flat plane is admissible
    st = lower_plane(ctx, PlaneFunc(0.1, 0.05, 2.0))
    assert len(st.touching) == 1
    assert ctx.gaps(st.plane).min() == pytest.approx(0.0, abs=1e-12)
    st2 = tilt_plane(ctx, st)
    assert len(st2.touching) >= 2
    assert ctx.gaps(st2.plane).min() >= -ctx.tol
    with pytest.raises(InadmissiblePlaneError):
        lower_plane(ctx, PlaneFunc(0, 0, -1.0))


def test_seed_is_lowest_through_pair():
    ctx = CleavingContext.from_force_system(seven())
    st = seed_plane(ctx, 0)
    assert {0, 1} <= set(st.touching)
    assert ctx.gaps(st.plane).min() >= -ctx.tol


def test_non_compressible_rejected():
    with pytest.raises(GeometryError):
        CleavingContext.from_force_system(ForceSystem(SQUARE, -INWARD))


def test_random_systems_roll_to_maximal_regions():
    rng = np.random.default_rng(21)
    for _ in range(15):
        ctx = CleavingContext.from_force_system(random_compressible(rng, int(rng.integers(4, 9))))
        for st in roll_maximal_regions(ctx):
            assert len(st.touching) >= 2
            assert ctx.gaps(st.plane).min() >= -ctx.tol
            assert is_maximal(ctx, st)
