import numpy as np
import pytest
from scipy import special

from conftest import line_space, two_point
from oracles import brute_box_to_point, grid_obs_diam, random_space
from mmtk.core import diam, scale
from mmtk.construct import TransformSpec, transform
from mmtk.errors import MalformedSpace, SearchBudgetExceeded
from mmtk.invariants import (RealMeasure, as_line_measure, discretize_gaussian_1d,
                             gaussian_mass, gaussian_mass_inverse, gaussian_obs_diam,
                             obs_diam_exact, obs_diam_lower, obs_diam_total, partial_diam_line,
                             partial_diam_space, sphere_box_lower, sphere_concentration_ratio)


def test_partial_diam_line_examples():
    nu = RealMeasure([0.0, 1.0, 3.0], [0.25, 0.5, 0.25])
    assert partial_diam_line(nu, 0.5) == 0.0
    assert partial_diam_line(nu, 0.75) == 1.0
    assert partial_diam_line(nu, 1.0) == 3.0
    assert partial_diam_line(nu, 0.0) == 0.0


def test_partial_diam_space_matches_subsets(rng):
    from itertools import combinations
    for _ in range(30):
        X = random_space(rng, int(rng.integers(1, 7)))
        alpha = float(rng.uniform(0.1, 1.0))
        best = min(float(X.dist[np.ix_(A, A)].max())
                   for r in range(1, X.n + 1) for A in map(list, combinations(range(X.n), r))
                   if X.weight[A].sum() >= alpha - 1e-12)
        assert partial_diam_space(X, alpha) == pytest.approx(best)


def test_line_and_space_agree(rng):
    for _ in range(20):
        xs = np.sort(rng.uniform(0, 3, 6))
        X = line_space(xs, rng.dirichlet(np.ones(6)))
        nu = as_line_measure(X)
        for alpha in (0.3, 0.6, 0.9):
            assert partial_diam_line(nu, alpha) == pytest.approx(partial_diam_space(X, alpha))


def test_as_line_measure_rejects_non_line():
    X = np.array([[0, 1, 1], [1, 0, 1], [1, 1, 0]], float)
    from mmtk.core import validate_space
    with pytest.raises(MalformedSpace):
        as_line_measure(validate_space(X, [1 / 3] * 3))


def test_obs_diam_examples(point):
    assert obs_diam_exact(point, 0.1).value == 0.0
    # two atoms at distance 2: the distance function separates them
    assert obs_diam_exact(two_point(2.0), 0.1).value == pytest.approx(2.0)
    assert obs_diam_exact(two_point(2.0), 0.6).value == 0.0


def test_obs_diam_witness_is_lipschitz(rng):
    for _ in range(15):
        X = random_space(rng, int(rng.integers(2, 6)))
        for kappa in (0.1, 0.25):
            res = obs_diam_exact(X, kappa)
            assert res.exact and res.witness.is_lipschitz()
            assert res.value <= diam(X) + 1e-12
            assert obs_diam_lower(X, kappa) <= res.value + 1e-9


def test_obs_diam_matches_grid(rng):
    for _ in range(15):
        X = random_space(rng, int(rng.integers(2, 5)))
        for kappa in (0.1, 0.3):
            exact = obs_diam_exact(X, kappa).value
            grid = grid_obs_diam(X, kappa, steps=20)
            assert grid <= exact + 1e-9
            assert exact - grid <= 0.1 * diam(X)


def test_obs_diam_on_line_is_partial_diam(rng):
    # on a line the identity is the best 1-Lipschitz function
    for _ in range(10):
        X = line_space(np.sort(rng.uniform(0, 2, 5)), rng.dirichlet(np.ones(5)))
        for kappa in (0.05, 0.2):
            assert obs_diam_exact(X, kappa).value == pytest.approx(
                partial_diam_line(as_line_measure(X), 1 - kappa), abs=1e-8)


def test_obs_diam_large_regime(rng):
    X = random_space(rng, 9, "cloud")
    res = obs_diam_exact(X, 0.2)
    assert not res.exact and res.witness.is_lipschitz()
    with pytest.raises(SearchBudgetExceeded):
        obs_diam_exact(X, 0.2, strict=True)


def test_obs_diam_monotone_and_below_partial_diam(rng):
    for _ in range(10):
        X = random_space(rng, int(rng.integers(2, 6)))
        ks = np.linspace(0.02, 0.98, 25)
        vals = [obs_diam_exact(X, k).value for k in ks]
        assert all(b <= a + 1e-9 for a, b in zip(vals, vals[1:]))
        for k, v in zip(ks, vals):
            assert v <= partial_diam_space(X, 1 - k) + 1e-9


def test_od_transform_inequality_concave(rng):
    F = TransformSpec.concave_pl([(0.2, 0.3), (0.6, 0.5), (1.5, 0.6)])
    for _ in range(15):
        X = random_space(rng, int(rng.integers(2, 6)))
        FX = transform(X, F)
        for kappa in (0.1, 0.2, 0.3):
            lhs = obs_diam_exact(FX, 2 * kappa).value
            assert lhs <= 4 * float(F(obs_diam_exact(X, kappa).value)) + 1e-9


def test_od_total(rng, point):
    assert obs_diam_total(point) == 0.0
    for _ in range(10):
        X = random_space(rng, int(rng.integers(2, 5)))
        v = obs_diam_total(X)
        assert 0 <= v <= diam(X) + 1e-12
        ks = np.linspace(0.01, 0.99, 60)
        assert v <= min(max(obs_diam_exact(X, k).value, k) for k in ks) + 1e-9


def test_od_transform_inequality(rng):
    for _ in range(15):
        X = random_space(rng, int(rng.integers(2, 6)))
        F = TransformSpec.truncate(float(rng.uniform(0.05, 1)))
        FX = transform(X, F)
        for kappa in (0.1, 0.2, 0.3):
            lhs = obs_diam_exact(FX, 2 * kappa).value
            assert lhs <= 4 * float(F(obs_diam_exact(X, kappa).value)) + 1e-9


def test_gaussian_mass_against_erf():
    for r in (0.1, 0.5, 1.0, 2.5):
        assert gaussian_mass(r) == pytest.approx(0.5 * special.erf(r / np.sqrt(2)), abs=1e-12)
        assert gaussian_mass_inverse(gaussian_mass(r)) == pytest.approx(r, abs=1e-9)


def test_gaussian_obs_diam():
    v = gaussian_obs_diam(1.0, 0.5)
    assert v == pytest.approx(2 * special.ndtri(0.75), abs=1e-8)
    assert v == pytest.approx(1.3490, abs=1e-4)
    for lam in (0.5, 2.0, 3.7):
        assert gaussian_obs_diam(lam, 0.5) == pytest.approx(lam * v, abs=1e-9)
    with pytest.raises(ValueError):
        gaussian_obs_diam(1.0, 1.0)


def test_gaussian_discretization():
    X = discretize_gaussian_1d(1.0, 2000)
    approx = partial_diam_line(as_line_measure(X), 0.5)
    assert abs(approx - gaussian_obs_diam(1.0, 0.5)) / gaussian_obs_diam(1.0, 0.5) < 0.02


def test_sphere_ratio():
    assert sphere_concentration_ratio(1) == pytest.approx(1 / np.pi, abs=1e-10)
    # closed form for n = 3: (1 - sin 1 cos 1) / pi
    assert sphere_concentration_ratio(3) == pytest.approx(
        (1 - np.sin(1) * np.cos(1)) / np.pi, abs=1e-10)
    for n in (2, 5, 10, 30):
        oracle = special.betainc((n - 1) / 2 + 0.5, 0.5, np.sin(1.0) ** 2) / 2
        assert sphere_concentration_ratio(n) == pytest.approx(oracle, abs=1e-9)
    r = [sphere_concentration_ratio(n) for n in range(1, 51)]
    assert all(a > b for a, b in zip(r, r[1:]))
    assert sphere_box_lower(50) > 0.99


def test_box_point_on_scaled_line():
    # four adjacent atoms: diameter 0.3, missing mass 0.2
    X = scale(line_space(np.linspace(0, 4, 5)), 0.1)
    assert brute_box_to_point(X) == pytest.approx(0.3)
