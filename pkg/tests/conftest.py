import json
from pathlib import Path

import numpy as np
import pytest

from strutforge import ForceSystem, check_compressibility
from strutforge.loopreduce import balance_exactly
from strutforge.synthesis import Obstacle

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

SQUARE = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
INWARD = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


def fixture_path(name: str) -> Path:
    return FIXTURES / name


def load_fixture(name: str) -> dict:
    return json.loads(fixture_path(name).read_text())


@pytest.fixture
def inward_square():
    return ForceSystem(SQUARE, INWARD)


@pytest.fixture
def outward_square():
    return ForceSystem(SQUARE, -INWARD)


def random_polygon(rng, n):
    """Vertices of a random convex n-gon (counter-clockwise, no angle gap >= pi)."""
    while True:
        ang = np.sort(rng.uniform(0.0, 2 * np.pi, n))
        gaps = np.diff(np.r_[ang, ang[0] + 2 * np.pi])
        if gaps.max() < 0.9 * np.pi and gaps.min() > 0.05:
            break
    a, b = rng.uniform(0.5, 2.0, 2)
    return np.c_[a * np.cos(ang), b * np.sin(ang)] + rng.normal(0.0, 1.0, 2)


def random_balanced(rng, n, noise=0.5):
    """Random polygon with exactly balanced forces, roughly pointing inward."""
    X = random_polygon(rng, n)
    s = rng.uniform(0.3, 2.0, n)
    c = s @ X / s.sum()
    F = s[:, None] * (c - X) + noise * rng.normal(size=(n, 2)) * s[:, None]
    return X, balance_exactly(X, F)


def random_compressible(rng, n, noise=0.5, tries=200):
    for _ in range(tries):
        X, F = random_balanced(rng, n, noise)
        fs = ForceSystem(X, F)
        if check_compressibility(fs):
            return fs
    raise RuntimeError("no compressible system found")


def net_edge_lengths(net):
    return np.hypot(*(net.nodes[net.edges[:, 0]] - net.nodes[net.edges[:, 1]]).T)


def square_obstacle(center, half):
    cx, cy = center
    return Obstacle.from_points([[cx - half, cy - half], [cx + half, cy - half], [cx + half, cy + half], [cx - half, cy + half]])
