import math

import numpy as np
import pytest

from strutforge.envelope import (
    EmptyRegionError,
    StrutNet,
    boundary_weight,
    cleave,
    extract_net,
    gamma_region,
    min_envelope,
    open_envelope,
    total_weight,
)
from strutforge.equilibrium import ConsistencyError, ForceSystem, tangent_planes
from strutforge.geometry import ConvexPolygon, PlaneFunc

from conftest import INWARD, SQUARE, random_compressible


def test_inward_square_open_net():
    fs = ForceSystem(SQUARE, INWARD)
    env = open_envelope(fs)
    assert env.facet_count == 4
    net = extract_net(env, fs)
    assert net.n_struts == 4
    hub = [k for k in range(len(net.nodes)) if not np.any(np.all(np.isclose(net.nodes[k], SQUARE), axis=1))]
    assert len(hub) == 1
    assert np.allclose(net.nodes[hub[0]], [0.5, 0.5], atol=1e-12)
    assert np.allclose(net.forces, math.sqrt(2), atol=1e-9)
    assert net.max_residual() <= 1e-9
    assert total_weight(net) == pytest.approx(4.0, abs=1e-8)
    assert net.loop_count() == 0


def test_envelope_values():
    fs = ForceSystem(SQUARE, INWARD)
    env = open_envelope(fs)
    # phi0 is the pyramid min(0, -x+y, -2x+1, -x-y+1) on the square
    g = np.linspace(0, 1, 11)
    P = np.array([(x, y) for x in g for y in g])
    ref = np.minimum.reduce([np.zeros(len(P)), -P[:, 0] + P[:, 1], -2 * P[:, 0] + 1, -P[:, 0] - P[:, 1] + 1])
    assert np.allclose(env(P), ref, atol=1e-12)


def test_boundary_strut_after_cleaving():
    fs = ForceSystem(SQUARE, INWARD)
    env = open_envelope(fs)
    L = PlaneFunc(-1 / 3, 0, 0)
    cut = cleave(env, [L])
    net = extract_net(cut, fs)
    assert net.max_residual() <= 1e-9
    assert net.forces.min() >= -1e-12
    # the cleaving plane meets the left edge plane L_1 = 0 along x = 0
    a = np.flatnonzero(np.all(np.isclose(net.nodes, [0, 0]), axis=1))[0]
    b = np.flatnonzero(np.all(np.isclose(net.nodes, [0, 1]), axis=1))[0]
    k = [i for i, e in enumerate(net.edges) if set(e) == {a, b}]
    assert len(k) == 1
    assert net.forces[k[0]] == pytest.approx(1 / 3, abs=1e-12)


def test_gamma_region():
    fs = ForceSystem(SQUARE, INWARD)
    env = open_envelope(fs)
    L = PlaneFunc(-0.8, 0.1, 0.05)
    G = gamma_region(env, L)
    # oracle: fraction of a fine grid where the plane lies below phi0
    g = (np.arange(800) + 0.5) / 800
    P = np.array(np.meshgrid(g, g)).reshape(2, -1).T
    frac = float(np.mean(L(P) <= env(P)))
    assert G.area == pytest.approx(frac, abs=5e-3)
    assert all(L(v) <= env(v) + 1e-12 for v in G.vertices)
    with pytest.raises(EmptyRegionError):
        gamma_region(env, PlaneFunc(0, 0, 5.0))


def test_min_envelope_dedupes_planes():
    dom = ConvexPolygon(SQUARE)
    L = PlaneFunc(1, 0, 0)
    env = min_envelope([L, PlaneFunc(-1, 0, 1), L], dom)
    assert env.facet_count == 2


def test_strut_net_round_trip():
    fs = ForceSystem(SQUARE, INWARD)
    net = extract_net(open_envelope(fs), fs)
    back = StrutNet.from_dict(net.to_dict())
    assert np.allclose(back.nodes, net.nodes)
    assert np.array_equal(back.edges, net.edges)
    assert np.allclose(back.forces, net.forces)
    assert back.max_residual() <= 1e-9


def test_divergence_identity_random():
    rng = np.random.default_rng(11)
    for _ in range(40):
        fs = random_compressible(rng, int(rng.integers(3, 11)))
        tp = tangent_planes(fs)
        net = extract_net(open_envelope(fs), fs)
        w = total_weight(net)
        ref = boundary_weight(fs.points, tp.planes, fs.orientation)
        assert w == pytest.approx(ref, rel=1e-8)
        assert net.forces.min() >= -1e-9 * net.forces.max()
        assert net.loop_count() == 0


def test_concavity_sampled_random():
    rng = np.random.default_rng(12)
    for _ in range(20):
        fs = random_compressible(rng, int(rng.integers(3, 11)))
        env = open_envelope(fs)
        hull = env.domain.vertices
        # midpoints of random pairs of hull points lie in the domain
        w = rng.dirichlet(np.ones(len(hull)), size=(60, 2))
        a, b = w[:, 0] @ hull, w[:, 1] @ hull
        mid = 0.5 * (a + b)
        assert np.all(env(mid) >= 0.5 * (env(a) + env(b)) - 1e-9 * fs.moment_scale)


def test_extract_net_rejects_bad_loads():
    fs = ForceSystem(SQUARE, INWARD)
    env = open_envelope(fs)
    with pytest.raises(ConsistencyError, match="residual"):
        extract_net(env, fs.points, 2 * fs.loads)
