"""Compiled vs pure-Python kernels.

    python benchmarks/bench_kernels.py [--repeat N] [--no-e2e]

Times each kernel on the same inputs in both backends, then runs one
reactive solve end to end in a child process per backend
(``STRUTFORGE_PURE=1`` forces the fallback).
"""
import argparse
import os
import subprocess
import sys
import timeit
from pathlib import Path

import numpy as np

from strutforge import _pykernels

try:
    from strutforge import _ckernels
except ImportError:
    _ckernels = None

ROOT = Path(__file__).resolve().parent.parent

E2E = """
import time
from strutforge import BACKEND
from strutforge.io import load_problem
from strutforge.synthesis import solve_reactive
prob = load_problem({path!r})
t = time.perf_counter()
solve_reactive(prob.force_system, prob.obstacles)
print(BACKEND, time.perf_counter() - t)
"""


def cases(rng):
    sq = np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    ang = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    disk = np.c_[np.cos(ang), np.sin(ang)]
    G = rng.normal(size=(200, 2))
    C = rng.normal(size=200) * 0.3
    T = rng.normal(size=(120, 300))
    return {
        "clip_halfplane (64-gon)": lambda k: k.clip_halfplane(disk, 0.6, 0.8, -0.1, 1e-12),
        "envelope_cell (200 planes)": lambda k: k.envelope_cell(G, C, 7, sq, 1e-12),
        "pivot (120 x 300 tableau)": lambda k: k.pivot(T, 5, 9),
    }


def best_of(fn, repeat):
    number = 20
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--no-e2e", action="store_true", help="skip the end-to-end solve")
    ap.add_argument("--problem", default=str(ROOT / "fixtures" / "single_force_four_obstacles.json"))
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels not built; only the fallback is available")
        return 1

    rng = np.random.default_rng(0)
    print(f"{'kernel':32s} {'python':>12s} {'cython':>12s} {'speedup':>8s}")
    for name, call in cases(rng).items():
        tp = best_of(lambda: call(_pykernels), args.repeat)
        tc = best_of(lambda: call(_ckernels), args.repeat)
        print(f"{name:32s} {tp * 1e6:10.1f}us {tc * 1e6:10.1f}us {tp / tc:7.1f}x")

    if not args.no_e2e:
        print(f"\nend to end: {Path(args.problem).name}")
        for pure in ("0", "1"):
            env = dict(os.environ, STRUTFORGE_PURE=pure)
            out = subprocess.run(
                [sys.executable, "-c", E2E.format(path=args.problem)],
                env=env, capture_output=True, text=True, check=True,
            )
            backend, secs = out.stdout.split()
            print(f"  {backend:8s} {float(secs):8.2f} s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
