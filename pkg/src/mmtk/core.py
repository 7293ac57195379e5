"""Finite metric measure spaces and the two basic relations between them.

A :class:`FiniteMMSpace` is a labeled point set with a symmetric distance
matrix and a strictly positive probability vector (full support).  Two spaces
are compared either for mm-isomorphism (measure-preserving isometry) or for
the Lipschitz order ``Y < X`` (a 1-Lipschitz measure-preserving map X -> Y).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import (AsymmetricMatrix, InconsistentCluster, InvalidWitness,
                     MalformedSpace, NegativeScale, NonProbabilityWeights,
                     SearchBudgetExceeded, TriangleViolation,
                     ZeroDistanceDistinctPoints)

TAU_METRIC = 1e-9
TAU_MASS = 1e-9
DOMINANCE_BUDGET = 1_000_000


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMMSpace:
    """Finite mm-space with full support.

    Build instances through :func:`validate_space` or :func:`quotient_support`;
    the constructor itself trusts its arguments.
    """

    labels: tuple
    dist: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        object.__setattr__(self, "dist", _frozen(self.dist))
        object.__setattr__(self, "weight", _frozen(self.weight))

    @property
    def n(self) -> int:
        return len(self.labels)

    def __len__(self):
        return self.n

    def __repr__(self):
        return f"FiniteMMSpace(n={self.n}, diam={diam(self):.6g})"

    def same_as(self, other: "FiniteMMSpace") -> bool:
        """Exact equality of labels, matrix and weights."""
        return (self.labels == other.labels
                and np.array_equal(self.dist, other.dist)
                and np.array_equal(self.weight, other.weight))


@dataclass(frozen=True, eq=False)
class PointMap:
    """Map between finite spaces given by an index vector into the target."""

    source: FiniteMMSpace
    target: FiniteMMSpace
    assignment: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.assignment, dtype=np.int64).copy()
        a.setflags(write=False)
        object.__setattr__(self, "assignment", a)
        if a.shape != (self.source.n,):
            raise MalformedSpace("assignment length must equal the source size")
        if a.size and (a.min() < 0 or a.max() >= self.target.n):
            raise MalformedSpace("assignment index out of range")

    def pushforward(self) -> np.ndarray:
        return np.bincount(self.assignment, weights=self.source.weight,
                           minlength=self.target.n)

    def lipschitz_excess(self) -> float:
        """max over pairs of d_Y(f x, f x') - d_X(x, x')."""
        a = self.assignment
        return float(np.max(self.target.dist[np.ix_(a, a)] - self.source.dist))

    def verify(self, tol: float = TAU_METRIC, tol_mass: float = TAU_MASS) -> None:
        """Raise InvalidWitness unless the map is 1-Lipschitz and measure preserving."""
        excess = self.lipschitz_excess()
        if excess > tol:
            raise InvalidWitness(f"map is not 1-Lipschitz (excess {excess:.3g})")
        gap = np.max(np.abs(self.pushforward() - self.target.weight))
        if gap > tol_mass:
            raise InvalidWitness(f"push-forward differs from target measure by {gap:.3g}")


def one_point(label: str = "*") -> FiniteMMSpace:
    """The one-point space ``*``."""
    return FiniteMMSpace((label,), np.zeros((1, 1)), np.ones(1))


def _as_arrays(dist, weight, labels):
    d = np.asarray(dist, dtype=np.float64)
    w = np.asarray(weight, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise MalformedSpace(f"distance matrix must be square, got shape {d.shape}")
    n = d.shape[0]
    if n < 1:
        raise MalformedSpace("a space needs at least one point")
    if w.shape != (n,):
        raise MalformedSpace(f"weight vector must have length {n}, got shape {w.shape}")
    if labels is None:
        labels = [str(i) for i in range(n)]
    labels = [str(s) for s in labels]
    if len(labels) != n:
        raise MalformedSpace(f"expected {n} labels, got {len(labels)}")
    if not (np.all(np.isfinite(d)) and np.all(np.isfinite(w))):
        raise MalformedSpace("non-finite entries")
    return d, w, labels


def _check_metric(d, tol_metric, allow_zero):
    n = d.shape[0]
    if np.any(d < 0):
        i, j = np.argwhere(d < 0)[0]
        raise MalformedSpace(f"negative distance at ({i}, {j})")
    if np.any(np.diag(d) != 0):
        i = int(np.flatnonzero(np.diag(d) != 0)[0])
        raise MalformedSpace(f"nonzero diagonal entry at {i}")
    asym = np.abs(d - d.T)
    if np.any(asym > tol_metric):
        i, j = np.argwhere(asym > tol_metric)[0]
        raise AsymmetricMatrix(int(i), int(j), float(d[i, j]), float(d[j, i]))
    if not allow_zero and n > 1:
        off = d + np.eye(n)
        if np.any(off <= tol_metric):
            i, j = np.argwhere(off <= tol_metric)[0]
            raise ZeroDistanceDistinctPoints(int(min(i, j)), int(max(i, j)))
    i, j, k, excess = _kernels.triangle_violation(np.ascontiguousarray(d), tol_metric)
    if i >= 0:
        raise TriangleViolation(int(i), int(j), int(k), float(excess))


def _symmetrized(d):
    return 0.5 * (d + d.T)


def validate_space(dist, weight, labels: Optional[Sequence[str]] = None, *,
                   tol_metric: float = TAU_METRIC, tol_mass: float = TAU_MASS) -> FiniteMMSpace:
    """Check the mm-space axioms and return a space.

    Raises the first violated axiom: MalformedSpace, AsymmetricMatrix,
    ZeroDistanceDistinctPoints, TriangleViolation or NonProbabilityWeights.
    """
    d, w, labels = _as_arrays(dist, weight, labels)
    _check_metric(d, tol_metric, allow_zero=False)
    if np.any(w <= 0) or abs(w.sum() - 1.0) > tol_mass:
        raise NonProbabilityWeights(
            f"weights must be positive and sum to 1 (sum={w.sum()!r}, min={w.min()!r})")
    return FiniteMMSpace(labels, _symmetrized(d), w)


def quotient_map(dist, weight, labels: Optional[Sequence[str]] = None, *,
                 tol_metric: float = TAU_METRIC, tol_mass: float = TAU_MASS):
    """Like :func:`quotient_support` but also return the index map.

    ``mapping[i]`` is the new index of input point i, or -1 if it was dropped.
    """
    d, w, labels = _as_arrays(dist, weight, labels)
    if np.any(w < 0) or abs(w.sum() - 1.0) > tol_mass:
        raise NonProbabilityWeights(f"weights must be nonnegative and sum to 1 (sum={w.sum()!r})")
    _check_metric(d, tol_metric, allow_zero=True)
    n = d.shape[0]
    mapping = -np.ones(n, dtype=np.int64)
    reps = []
    for i in range(n):
        if mapping[i] >= 0 or w[i] <= 0:
            continue
        mapping[i] = len(reps)
        reps.append(i)
        for j in range(i + 1, n):
            if mapping[j] < 0 and d[i, j] <= tol_metric:
                gap = np.abs(d[i] - d[j])
                gap[[i, j]] = 0.0
                if np.any(gap > tol_metric):
                    raise InconsistentCluster(i, j, int(np.argmax(gap)))
                mapping[j] = mapping[i]
    reps = np.array(reps, dtype=np.int64)
    live = mapping >= 0
    new_w = np.bincount(mapping[live], weights=w[live], minlength=len(reps))
    # dropped null points still count as merged if they sit on a kept point
    for i in np.flatnonzero(~live & (w <= 0)):
        close = np.flatnonzero((d[i, reps] <= tol_metric))
        if close.size:
            mapping[i] = close[0]
    new_d = _symmetrized(d[np.ix_(reps, reps)])
    return FiniteMMSpace([labels[i] for i in reps], new_d, new_w), mapping


def quotient_support(dist, weight, labels: Optional[Sequence[str]] = None, *,
                     tol_metric: float = TAU_METRIC, tol_mass: float = TAU_MASS) -> FiniteMMSpace:
    """Restrict to the support and identify points at distance zero.

    Zero-weight points are dropped; each zero-distance cluster becomes one
    point carrying the summed weight and the label of its first member.
    """
    return quotient_map(dist, weight, labels, tol_metric=tol_metric, tol_mass=tol_mass)[0]


def requotient(space: FiniteMMSpace, **kw) -> FiniteMMSpace:
    return quotient_support(space.dist, space.weight, space.labels, **kw)


def diam(space: FiniteMMSpace) -> float:
    return float(space.dist.max())


def scale(space: FiniteMMSpace, t: float) -> FiniteMMSpace:
    """``tX``: every distance multiplied by t; ``0X`` is the one-point space."""
    t = float(t)
    if t < 0 or not np.isfinite(t):
        raise NegativeScale(f"scale factor must be a finite nonnegative number, got {t!r}")
    if t == 0:
        return one_point()
    return FiniteMMSpace(space.labels, space.dist * t, space.weight)


def _profiles(space):
    return np.sort(space.dist, axis=1)


def mm_isomorphic(X: FiniteMMSpace, Y: FiniteMMSpace, tol: float = TAU_METRIC) -> Optional[np.ndarray]:
    """Return a measure-preserving isometry X -> Y as an index vector, or None.

    One tolerance governs both distance and weight comparisons.  Candidates
    for each point are filtered by weight and by its sorted distance profile;
    the search tries targets in index order so the answer is deterministic.
    """
    n = X.n
    if Y.n != n:
        return None
    if np.max(np.abs(np.sort(X.weight) - np.sort(Y.weight))) > tol:
        return None
    iu = np.triu_indices(n, 1)
    if n > 1 and np.max(np.abs(np.sort(X.dist[iu]) - np.sort(Y.dist[iu]))) > tol:
        return None
    px, py = _profiles(X), _profiles(Y)
    cand = [[j for j in range(n)
             if abs(X.weight[i] - Y.weight[j]) <= tol and np.max(np.abs(px[i] - py[j])) <= tol]
            for i in range(n)]
    if any(not c for c in cand):
        return None
    order = sorted(range(n), key=lambda i: (len(cand[i]), i))
    assign = -np.ones(n, dtype=np.int64)
    used = np.zeros(n, dtype=bool)

    def extend(k):
        if k == n:
            return True
        i = order[k]
        done = [order[q] for q in range(k)]
        for j in cand[i]:
            if used[j]:
                continue
            if done and np.max(np.abs(X.dist[i, done] - Y.dist[j, assign[done]])) > tol:
                continue
            assign[i] = j
            used[j] = True
            if extend(k + 1):
                return True
            used[j] = False
            assign[i] = -1
        return False

    return assign.copy() if extend(0) else None


def dominates(X: FiniteMMSpace, Y: FiniteMMSpace, tol: float = TAU_METRIC, *,
              tol_mass: float = TAU_MASS, budget: int = DOMINANCE_BUDGET) -> Optional[PointMap]:
    """Decide ``Y < X`` in the Lipschitz order.

    Returns a 1-Lipschitz map f: X -> Y with f_* mu_X = mu_Y (within the
    tolerances), or None when no such map exists.  Exhaustive backtracking
    over assignments in lexicographic order; raises SearchBudgetExceeded once
    more than ``budget`` partial assignments have been visited.
    """
    m, n = X.n, Y.n
    if n == 1:
        return PointMap(X, Y, np.zeros(m, dtype=np.int64))
    if n > m:
        return None
    fiber = np.zeros(n)
    assign = -np.ones(m, dtype=np.int64)
    nodes = 0
    suffix = np.concatenate([np.cumsum(X.weight[::-1])[::-1], [0.0]])

    def extend(i):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise SearchBudgetExceeded(f"dominance search exceeded {budget} nodes")
        if i == m:
            return bool(np.all(np.abs(fiber - Y.weight) <= tol_mass))
        deficit = np.clip(Y.weight - fiber, 0.0, None).sum()
        if deficit > suffix[i] + tol_mass:
            return False
        for j in range(n):
            if fiber[j] + X.weight[i] > Y.weight[j] + tol_mass:
                continue
            if i and np.any(Y.dist[j, assign[:i]] > X.dist[i, :i] + tol):
                continue
            assign[i] = j
            fiber[j] += X.weight[i]
            if extend(i + 1):
                return True
            fiber[j] -= X.weight[i]
            assign[i] = -1
        return False

    if extend(0):
        return PointMap(X, Y, assign.copy())
    return None
