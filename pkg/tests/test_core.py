import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import line_space, two_point
from oracles import random_space
from mmtk.core import (FiniteMMSpace, PointMap, diam, dominates, mm_isomorphic, one_point,
                       quotient_map, quotient_support, requotient, scale, validate_space)
from mmtk.errors import (AsymmetricMatrix, InconsistentCluster, InvalidWitness, MalformedSpace,
                         NegativeScale, NonProbabilityWeights, SearchBudgetExceeded,
                         TriangleViolation, ZeroDistanceDistinctPoints)


def test_one_point_is_valid():
    X = validate_space([[0.0]], [1.0])
    assert X.n == 1 and diam(X) == 0.0
    assert one_point().same_as(validate_space([[0.0]], [1.0], ["*"]))


def test_two_point_valid():
    X = two_point(2.0)
    assert X.n == 2 and diam(X) == 2.0


def test_triangle_violation_names_triple():
    d = [[0, 1, 3], [1, 0, 1], [3, 1, 0]]
    with pytest.raises(TriangleViolation) as exc:
        validate_space(d, [1 / 3] * 3)
    assert {exc.value.i, exc.value.k} == {0, 2} and exc.value.j == 1


@pytest.mark.parametrize("d, w, err", [
    ([[0, 1], [2, 0]], [0.5, 0.5], AsymmetricMatrix),
    ([[0, 0], [0, 0]], [0.5, 0.5], ZeroDistanceDistinctPoints),
    ([[0, 1], [1, 0]], [0.6, 0.6], NonProbabilityWeights),
    ([[0, 1], [1, 0]], [1.0, 0.0], NonProbabilityWeights),
    ([[0, 1, 2]], [1.0], MalformedSpace),
    ([[0, -1], [-1, 0]], [0.5, 0.5], MalformedSpace),
    ([[0, np.nan], [np.nan, 0]], [0.5, 0.5], MalformedSpace),
])
def test_validation_errors(d, w, err):
    with pytest.raises(err):
        validate_space(d, w)


def test_first_violated_axiom_wins():
    # asymmetric and violating the triangle inequality: asymmetry is reported
    d = [[0, 1, 5], [1, 0, 1], [3, 1, 0]]
    with pytest.raises(AsymmetricMatrix):
        validate_space(d, [1 / 3] * 3)


def test_quotient_examples():
    X = quotient_support([[0, 0], [0, 0]], [0.3, 0.7], ["p", "q"])
    assert X.n == 1 and X.labels == ("p",) and X.weight[0] == pytest.approx(1.0)
    X = quotient_support([[0, 5], [5, 0]], [1.0, 0.0])
    assert X.n == 1
    X = quotient_support([[0, 0, 1], [0, 0, 1], [1, 1, 0]], [0.2, 0.3, 0.5])
    assert X.n == 2
    np.testing.assert_allclose(X.weight, [0.5, 0.5])
    assert X.dist[0, 1] == 1.0


def test_quotient_inconsistent_cluster():
    with pytest.raises((InconsistentCluster, TriangleViolation)):
        quotient_support([[0, 0, 1], [0, 0, 2], [1, 2, 0]], [0.2, 0.3, 0.5])


def test_quotient_map_indices():
    X, m = quotient_map([[0, 1, 1], [1, 0, 0], [1, 0, 0]], [0.5, 0.25, 0.25])
    assert list(m) == [0, 1, 1] and X.n == 2


def test_quotient_idempotent(rng):
    for _ in range(20):
        X = random_space(rng, int(rng.integers(1, 6)))
        Q = requotient(X)
        assert requotient(Q).same_as(Q)


def test_isomorphism_examples():
    X = validate_space([[0, 1, 2], [1, 0, 1.5], [2, 1.5, 0]], [0.2, 0.3, 0.5])
    perm = [2, 0, 1]
    Y = validate_space(X.dist[np.ix_(perm, perm)], X.weight[perm])
    f = mm_isomorphic(X, Y)
    assert f is not None
    np.testing.assert_allclose(Y.dist[np.ix_(f, f)], X.dist)
    assert mm_isomorphic(two_point(2.0), scale(two_point(2.0), 2)) is None
    assert mm_isomorphic(two_point(1.0), two_point(1.0, (0.6, 0.4))) is None


def test_isomorphism_reflexive_symmetric(rng):
    for _ in range(30):
        X = random_space(rng, int(rng.integers(1, 6)))
        p = rng.permutation(X.n)
        Y = validate_space(X.dist[np.ix_(p, p)], X.weight[p])
        assert mm_isomorphic(X, X) is not None
        assert (mm_isomorphic(X, Y) is None) == (mm_isomorphic(Y, X) is None)


def test_dominates_examples(point):
    X = line_space([0, 1, 2])
    f = dominates(X, point)
    assert f is not None and list(f.assignment) == [0, 0, 0]
    f = dominates(X, scale(X, 0.5))
    assert list(f.assignment) == [0, 1, 2]
    Y = two_point(1.0, (2 / 3, 1 / 3))
    f = dominates(X, Y)
    assert list(f.assignment) == [0, 0, 1]
    f.verify()
    assert dominates(Y, X) is None


def test_dominates_budget():
    X = line_space(np.arange(9.0))
    Y = line_space(np.arange(9.0) * 1.01)
    with pytest.raises(SearchBudgetExceeded):
        dominates(X, Y, budget=5)


def test_pointmap_verify_rejects():
    X = line_space([0, 1])
    with pytest.raises(InvalidWitness):
        PointMap(X, scale(X, 2), [0, 1]).verify()
    with pytest.raises(InvalidWitness):
        PointMap(X, X, [0, 0]).verify()
    with pytest.raises(MalformedSpace):
        PointMap(X, X, [0, 5])


def test_order_properties(rng):
    spaces = [random_space(rng, int(rng.integers(1, 5)), "grid") for _ in range(14)]
    spaces += [scale(s, 0.5) for s in spaces[:4]]
    for X in spaces:
        assert dominates(X, X) is not None
    for X in spaces:
        for Y in spaces:
            f = dominates(X, Y)
            if f is None:
                continue
            f.verify()
            g = dominates(Y, X)
            if g is not None:
                assert mm_isomorphic(X, Y) is not None
            for Z in spaces:
                h = dominates(Y, Z)
                if h is not None:
                    # composite witness is itself valid
                    PointMap(X, Z, h.assignment[f.assignment]).verify()


def test_scale_basics():
    X = two_point(2.0)
    assert scale(X, 1).same_as(X)
    assert scale(X, 0).same_as(one_point())
    assert diam(X) == 2.0
    with pytest.raises(NegativeScale):
        scale(X, -1)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 20), st.integers(-6, 6), st.integers(-6, 6))
def test_scale_composition_exact(seed, a, b):
    X = random_space(np.random.default_rng(seed), 4)
    s, t = 2.0 ** a, 2.0 ** b
    assert np.array_equal(scale(scale(X, s), t).dist, scale(X, s * t).dist)


def test_space_is_immutable():
    X = two_point(1.0)
    with pytest.raises(ValueError):
        X.dist[0, 1] = 5
    assert isinstance(X, FiniteMMSpace)
