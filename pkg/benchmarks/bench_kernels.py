"""Compiled kernels against the pure-Python fallback.

Leaf kernels are timed in-process through ``kernel.py_func``; whole solvers
are timed in two subprocesses, one with MMTK_DISABLE_NUMBA=1.

    python benchmarks/bench_kernels.py [--repeat 3]
"""
import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

WORKLOAD = r"""
import json, time, numpy as np
from scipy.sparse.csgraph import shortest_path
from mmtk._accel import backend
from mmtk.core import validate_space
from mmtk.boxdist import box_exact, box_to_point
from mmtk.invariants import obs_diam_exact

def space(rng, n):
    W = np.triu(rng.uniform(0.1, 1.0, (n, n)), 1)
    d = shortest_path(W + W.T, directed=False)
    return validate_space(d, rng.dirichlet(np.ones(n)))

rng = np.random.default_rng(0)
pairs = [(space(rng, 4), space(rng, 4)) for _ in range(6)]
singles = [space(rng, 10) for _ in range(6)]
od = [space(rng, 6) for _ in range(3)]
box_exact(*pairs[0]); box_to_point(singles[0]); obs_diam_exact(od[0], 0.2)  # warm-up / compile
out = {"backend": backend()}
t = time.perf_counter(); [box_exact(X, Y) for X, Y in pairs]; out["box_exact 4x4 (x6)"] = time.perf_counter() - t
t = time.perf_counter(); [box_to_point(X) for X in singles]; out["box_to_point n=10 (x6)"] = time.perf_counter() - t
t = time.perf_counter(); [obs_diam_exact(X, 0.2) for X in od]; out["obs_diam_exact n=6 (x3)"] = time.perf_counter() - t
print(json.dumps(out))
"""


def _solver_times(disable):
    env = {**os.environ, "MMTK_DISABLE_NUMBA": "1" if disable else "0"}
    proc = subprocess.run([sys.executable, "-c", WORKLOAD], capture_output=True, text=True,
                          env=env, check=True)
    return json.loads(proc.stdout)


def _time(fn, *args, repeat=3):
    best = np.inf
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def leaf_kernels(repeat):
    from mmtk import _kernels
    from mmtk._accel import backend
    if backend() != "numba":
        print("numba disabled in this process; leaf comparison skipped")
        return
    rng = np.random.default_rng(1)
    n = 120
    P = rng.uniform(size=(n, 3))
    d = np.sqrt(((P[:, None] - P[None]) ** 2).sum(-1))
    mu, nu = rng.dirichlet(np.ones(60)), rng.dirichlet(np.ones(60))
    allowed = rng.random((60, 60)) < 0.1
    pos, w = np.sort(rng.uniform(size=5000)), rng.dirichlet(np.ones(5000))
    cases = [
        ("triangle_violation n=120", _kernels.triangle_violation, (d, 1e-9)),
        ("bipartite_maxflow 60x60", _kernels.bipartite_maxflow,
         (allowed, mu, nu, np.zeros((60, 60)))),
        ("line_partial_diam 5000", _kernels.line_partial_diam, (pos, w, 0.5)),
    ]
    print(f"{'kernel':28s} {'numba [s]':>10s} {'python [s]':>11s} {'speedup':>8s}")
    for name, k, args in cases:
        k(*args)
        fast = _time(k, *args, repeat=repeat)
        slow = _time(k.py_func, *args, repeat=repeat)
        print(f"{name:28s} {fast:10.5f} {slow:11.5f} {slow / fast:8.1f}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    leaf_kernels(args.repeat)
    fast, slow = _solver_times(False), _solver_times(True)
    print()
    print(f"{'solver':28s} {'numba [s]':>10s} {'python [s]':>11s} {'speedup':>8s}")
    for key in fast:
        if key == "backend":
            continue
        print(f"{key:28s} {fast[key]:10.4f} {slow[key]:11.4f} {slow[key] / fast[key]:8.1f}")


if __name__ == "__main__":
    main()
