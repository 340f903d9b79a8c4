"""Randomized property suites, 1000 instances each with n in 3..10."""
import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from strutforge import ForceSystem
from strutforge.envelope import boundary_weight, cleave, extract_net, open_envelope, total_weight
from strutforge.equilibrium import check_compressibility, concavity_margins, tangent_planes, torque_sums
from strutforge.geometry import PlaneFunc
from strutforge.lpsolve import LinProgram, solve_min
from strutforge.synthesis import avoid_multi, avoid_single

from conftest import random_balanced, random_compressible, square_obstacle

N_EXAMPLES = 1000
prop = settings(
    max_examples=N_EXAMPLES,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
seeds = st.integers(0, 2**32 - 1)
sizes = st.integers(3, 10)


def by_cells(env, x):
    """Envelope value at ``x`` through the cell that contains it."""
    for k, poly in env.cells:
        if poly.contains(x, tol=10 * env.tol):
            return env.planes[k](x)
    raise AssertionError(f"{x} is in no cell")


def sample_domain(rng, poly, m):
    V = poly.vertices
    w = rng.dirichlet(np.ones(len(V)), size=m)
    return w @ V


@prop
@given(seeds, sizes)
def test_envelope_is_concave(seed, n):
    rng = np.random.default_rng(seed)
    fs = random_compressible(rng, n)
    env = open_envelope(fs)
    tol = fs.value_tol
    M = concavity_margins(tangent_planes(fs))
    assert M.min() >= -tol
    P = sample_domain(rng, env.domain, 12)
    Q = sample_domain(rng, env.domain, 12)
    fp = np.array([by_cells(env, p) for p in P])
    fq = np.array([by_cells(env, q) for q in Q])
    assert np.allclose(fp, env(P), atol=tol)
    t = rng.uniform(0, 1, 12)[:, None]
    mid = np.array([by_cells(env, x) for x in (1 - t) * P + t * Q])
    assert np.all(mid >= ((1 - t[:, 0]) * fp + t[:, 0] * fq) - tol)


@prop
@given(seeds, sizes)
def test_cleaving_never_raises_envelope(seed, n):
    rng = np.random.default_rng(seed)
    fs = random_compressible(rng, n)
    env0 = open_envelope(fs)
    y = sample_domain(rng, env0.domain, 1)[0]
    g = rng.normal(size=2) * fs.force_scale
    L = PlaneFunc(g[0], g[1], env0(y) - g @ y - rng.uniform(0, 0.2) * fs.moment_scale)
    env = cleave(env0, [L])
    X = sample_domain(rng, env0.domain, 20)
    for x in X:
        assert by_cells(env, x) <= by_cells(env0, x) + fs.value_tol


def random_lp(rng):
    d = int(rng.integers(1, 7))
    m = int(rng.integers(1, 9))
    x0 = rng.uniform(-2, 2, d)
    lp = LinProgram(d)
    for _ in range(m):
        a = rng.normal(size=d)
        kind = rng.integers(3)
        if kind == 0:
            lp.add_eq(a, a @ x0)
        elif kind == 1:
            lp.add_le(a, a @ x0 + rng.exponential())
        else:
            lp.add_ge(a, a @ x0 - rng.exponential())
    for j in range(d):
        lp.set_bounds(j, -5.0, 5.0)
    lp.set_objective(rng.normal(size=d))
    return lp


@prop
@given(seeds)
def test_lp_witness_verified(seed):
    rng = np.random.default_rng(seed)
    lp = random_lp(rng)
    out = solve_min(lp)
    assert out.feasible  # constructed around a feasible point
    assert lp.violation(out.x) <= lp.tol


@prop
@given(seeds, sizes)
def test_divergence_identity(seed, n):
    rng = np.random.default_rng(seed)
    fs = random_compressible(rng, n)
    tp = tangent_planes(fs)
    net = extract_net(open_envelope(fs), fs)
    w = total_weight(net)
    assert abs(w - boundary_weight(fs.points, tp.planes, fs.orientation)) <= 1e-8 * max(w, 1.0)


@prop
@given(seeds, sizes, st.floats(0.0, 2.0), st.booleans())
def test_torque_and_concavity_agree(seed, n, noise, clockwise):
    rng = np.random.default_rng(seed)
    X, F = random_balanced(rng, n, noise)
    if clockwise:
        X, F = X[::-1].copy(), -F[::-1]
    fs = ForceSystem(X, F)
    M = concavity_margins(tangent_planes(fs))
    S = torque_sums(fs)
    verdict = check_compressibility(fs)
    if not clockwise:
        i, m = np.meshgrid(np.arange(n), np.arange(n - 1), indexing="ij")
        assert np.allclose(M[i, (i + m + 1) % n], -S[:, : n - 1], atol=fs.value_tol)
    np.fill_diagonal(M, np.inf)
    assert verdict == (M.min() >= -fs.value_tol)
    # the same physical system listed the other way round
    assert check_compressibility(ForceSystem(X[::-1].copy(), -F[::-1])) == verdict


@prop
@given(seeds, sizes)
def test_avoid_multi_one_obstacle_matches_single(seed, n):
    rng = np.random.default_rng(seed)
    fs = random_compressible(rng, n)
    c = fs.points.mean(axis=0) + rng.normal(0, 0.3, 2)
    obs = square_obstacle(c, rng.uniform(0.02, 0.3))
    a = avoid_single(fs, obs)
    b = avoid_multi(fs, [obs])
    assert a.status == b.status
    if a.feasible:
        tol = fs.value_tol
        phi0 = open_envelope(fs)
        for L in (a.cleaving[0], b.cleaving[0]):
            assert np.all(L(fs.points) >= phi0(fs.points) - tol)
            assert np.all(L(obs.vertices) <= phi0(obs.vertices) + tol)
        assert a.net.loop_count() == b.net.loop_count()
