"""Compiled kernels against their pure-Python source, and the env switch."""
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from oracles import random_space
from mmtk import _kernels
from mmtk._accel import backend
from mmtk.boxdist import box_exact, box_to_point, pack_bits
from mmtk.invariants import obs_diam_exact

compiled = pytest.mark.skipif(backend() != "numba", reason="numba disabled")


@compiled
def test_triangle_and_flow_match(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        d = rng.uniform(0, 1, (n, n))
        d = d + d.T
        np.fill_diagonal(d, 0)
        assert _kernels.triangle_violation(d, 1e-9) == _kernels.triangle_violation.py_func(d, 1e-9)
        allowed = rng.random((n, n)) < 0.5
        mu, nu = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        f1, f2 = np.zeros((n, n)), np.zeros((n, n))
        a = _kernels.bipartite_maxflow(allowed, mu, nu, f1)
        b = _kernels.bipartite_maxflow.py_func(allowed, mu, nu, f2)
        assert a == pytest.approx(b, abs=1e-12)
        np.testing.assert_allclose(f1, f2, atol=1e-12)


@compiled
def test_clique_and_line_match(rng):
    for _ in range(20):
        X = random_space(rng, int(rng.integers(2, 9)))
        adj = pack_bits(X.dist <= np.median(X.dist))
        a = _kernels.weighted_clique_search(adj, X.weight, 0.0, False, 10 ** 6)
        b = _kernels.weighted_clique_search.py_func(adj, X.weight, 0.0, False, 10 ** 6)
        assert a[0] == pytest.approx(b[0]) and np.array_equal(a[1], b[1])
        pos = np.sort(rng.uniform(0, 1, 8))
        w = rng.dirichlet(np.ones(8))
        assert _kernels.line_partial_diam(pos, w, 0.6) == _kernels.line_partial_diam.py_func(
            pos, w, 0.6)


@compiled
def test_od_search_matches(rng):
    for _ in range(5):
        X = random_space(rng, 4)
        d, w = np.ascontiguousarray(X.dist), np.ascontiguousarray(X.weight)
        D = float(d.max())
        a = _kernels.obs_diam_search(d, w, 0.8, D, 1e-10 * D)
        b = _kernels.obs_diam_search.py_func(d, w, 0.8, D, 1e-10 * D)
        assert a[0] == pytest.approx(b[0], abs=1e-9)


SCRIPT = """
import json, numpy as np, sys
sys.path.insert(0, {tests!r})
from oracles import random_space
from mmtk._accel import backend
from mmtk.boxdist import box_exact, box_to_point
from mmtk.invariants import obs_diam_exact
rng = np.random.default_rng(7)
out = {{"backend": backend(), "box": [], "pt": [], "od": []}}
for _ in range(6):
    X, Y = random_space(rng, 3), random_space(rng, 2)
    out["box"].append(box_exact(X, Y).value)
    out["pt"].append(box_to_point(X)[0])
    out["od"].append(obs_diam_exact(X, 0.2).value)
print(json.dumps(out))
"""


def _values(disable):
    env = {**os.environ, "MMTK_DISABLE_NUMBA": "1" if disable else "0"}
    code = SCRIPT.format(tests=os.path.dirname(__file__))
    proc = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True,
                          env=env, check=True)
    return json.loads(proc.stdout)


def test_env_switch_gives_same_answers():
    slow, fast = _values(True), _values(False)
    assert slow["backend"] == "python"
    for key in ("box", "pt", "od"):
        np.testing.assert_allclose(slow[key], fast[key], atol=1e-9)
