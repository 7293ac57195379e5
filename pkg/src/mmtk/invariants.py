"""Partial and observable diameters, plus closed-form concentration quantities."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy import integrate, special

from . import _kernels
from ._accel import default_budget
from .boxdist import threshold_clique
from .core import TAU_MASS, TAU_METRIC, FiniteMMSpace, diam, one_point, quotient_support
from .errors import MalformedSpace, SearchBudgetExceeded

OD_MAX_N = 7
QUAD_TOL = 1e-10
BISECT_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RealMeasure:
    """Finitely supported probability measure on the real line."""

    positions: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.positions, dtype=np.float64)
        w = np.asarray(self.masses, dtype=np.float64)
        if x.shape != w.shape or x.ndim != 1 or x.size == 0:
            raise MalformedSpace("positions and masses must be nonempty vectors of equal length")
        if not np.all(np.isfinite(x)) or np.any(w <= 0) or abs(w.sum() - 1) > TAU_MASS:
            raise MalformedSpace("masses must be positive and sum to 1; positions finite")
        order = np.argsort(x, kind="stable")
        object.__setattr__(self, "positions", x[order])
        object.__setattr__(self, "masses", w[order])

    @classmethod
    def pushforward(cls, values, weight) -> "RealMeasure":
        return cls(values, weight)


@dataclass(frozen=True, eq=False)
class LipschitzVector:
    """Real function on the points of a space, 1-Lipschitz up to ``tol``."""

    space: FiniteMMSpace
    values: np.ndarray

    def excess(self) -> float:
        f = np.asarray(self.values)
        return float(np.max(np.abs(f[:, None] - f[None, :]) - self.space.dist))

    def is_lipschitz(self, tol: float = TAU_METRIC) -> bool:
        return self.excess() <= tol


class ODResult(NamedTuple):
    value: float
    witness: LipschitzVector
    exact: bool


def partial_diam_line(nu: RealMeasure, alpha: float) -> float:
    """Length of the shortest interval carrying mass >= alpha."""
    if not 0 <= alpha <= 1 + TAU_MASS:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha <= 0:
        return 0.0
    return float(_kernels.line_partial_diam(nu.positions, nu.masses, float(alpha)))


def partial_diam_space(X: FiniteMMSpace, alpha: float, budget: int | None = None) -> float:
    """Smallest diameter of a subset with mass >= alpha."""
    if not 0 <= alpha <= 1 + TAU_MASS:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha <= X.weight.max() + 1e-12:
        return 0.0
    budget = default_budget() if budget is None else int(budget)
    vals = np.unique(X.dist)
    used = 0
    lo, hi = 0, len(vals) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        score, _, nodes, status = threshold_clique(X, vals[mid], alpha, True, budget - used)
        used += nodes
        if status:
            raise SearchBudgetExceeded("partial_diam_space exceeded its node budget")
        if score >= 0:
            hi = mid
        else:
            lo = mid + 1
    return float(vals[lo])


def as_line_measure(X: FiniteMMSpace, tol: float = TAU_METRIC) -> RealMeasure:
    """Coordinates of a space isometric to a subset of the line.

    Measured from an endpoint of a diametral pair; raises MalformedSpace if
    the space does not embed in the line.
    """
    p = int(np.argmax(X.dist.max(axis=1)))
    pos = X.dist[p]
    if X.n <= 2000:
        if np.max(np.abs(np.abs(pos[:, None] - pos[None, :]) - X.dist)) > tol:
            raise MalformedSpace("space is not isometric to a subset of the line")
    return RealMeasure(pos, X.weight)


def diam_pushforward(X: FiniteMMSpace, values, alpha: float) -> float:
    return partial_diam_line(RealMeasure(np.asarray(values, float), X.weight), alpha)


def obs_diam_exact(X: FiniteMMSpace, kappa: float, max_n: int = OD_MAX_N,
                   strict: bool = False) -> ODResult:
    """Observable diameter OD(X; -kappa) with a Lipschitz witness.

    Every 1-Lipschitz f sorts the points in some order; for a fixed order the
    best f solves a system of difference constraints (Lipschitz bounds, the
    order, and 'each minimal window of mass >= 1 - kappa spans >= t'), whose
    largest feasible t is found by bisection with negative-cycle tests.
    Beyond ``max_n`` points the lower bound is returned (exact=False) unless
    ``strict`` asks for SearchBudgetExceeded.
    """
    if not 0 < kappa:
        raise ValueError("kappa must be positive")
    alpha = 1.0 - kappa
    if alpha <= X.weight.max() + 1e-12:
        return ODResult(0.0, LipschitzVector(X, np.zeros(X.n)), True)
    if X.n > max_n:
        if strict:
            raise SearchBudgetExceeded(f"obs_diam_exact regime is n <= {max_n}, got {X.n}")
        value, witness = _obs_diam_candidates(X, kappa, samples=64)
        return ODResult(value, LipschitzVector(X, witness), False)
    D = diam(X)
    tol = BISECT_TOL * max(1.0, D)
    d = np.ascontiguousarray(X.dist)
    w = np.ascontiguousarray(X.weight)
    _, sigma = _kernels.obs_diam_search(d, w, alpha, D, tol)
    witness = _witness_for_order(d, w, sigma, alpha, D, tol)
    value = diam_pushforward(X, witness, alpha)
    return ODResult(value, LipschitzVector(X, witness), True)


def _witness_for_order(d, w, sigma, alpha, D, tol):
    t = _kernels.ordering_value(d, w, sigma, alpha, 0.0, D, tol)
    t = max(t, 0.0)
    n = d.shape[0]
    wa = np.empty(n, np.int64)
    wb = np.empty(n, np.int64)
    nw = _kernels._minimal_windows(w, sigma, alpha, wa, wb)
    dmat = np.empty((n, n))
    base = _kernels.ordering_base(d, sigma)
    _kernels._ordering_feasible(base, sigma, wa, wb, nw, t, 1e-13 * (1 + D), dmat)
    # shortest-path potentials from a virtual source satisfy every constraint
    f = np.minimum(0.0, dmat.min(axis=0))
    return f - f.min()


def _obs_diam_candidates(X: FiniteMMSpace, kappa: float, samples: int, seed: int = 0):
    alpha = 1.0 - kappa
    n = X.n
    cands = [X.dist[i] for i in range(n)]
    for i, j in combinations(range(min(n, 24)), 2):
        cands.append(0.5 * (X.dist[i] - X.dist[j]))
    rng = np.random.default_rng(seed)
    D = diam(X)
    for _ in range(samples):
        k = int(rng.integers(1, n + 1))
        anchors = rng.choice(n, size=k, replace=False)
        offsets = rng.uniform(0, D, size=k)
        cands.append(np.min(X.dist[anchors] + offsets[:, None], axis=0))
    best, arg = 0.0, np.zeros(n)
    for f in cands:
        v = diam_pushforward(X, f, alpha)
        if v > best:
            best, arg = v, f
    return best, arg


def obs_diam_lower(X: FiniteMMSpace, kappa: float, samples: int = 64, seed: int = 0) -> float:
    """Lower bound from distance functions, their half differences and random
    inf-convolutions min_k (a_k + d(., x_k)), all exactly 1-Lipschitz."""
    if samples < 0:
        raise ValueError("samples must be >= 0")
    if 1.0 - kappa <= X.weight.max() + 1e-12:
        return 0.0
    return _obs_diam_candidates(X, kappa, samples, seed)[0]


def _mass_breakpoints(X: FiniteMMSpace):
    """kappa values 1 - mu(A) over subsets A, within (0, 1)."""
    w = X.weight
    if X.n > 20:
        raise SearchBudgetExceeded("too many points to enumerate subset masses")
    masses = np.zeros(1)
    for x in w:
        masses = np.concatenate([masses, masses + x])
    ks = np.unique(np.round(1.0 - masses, 15))
    return ks[(ks > 1e-12) & (ks < 1 - 1e-12)]


def obs_diam_total(X: FiniteMMSpace, max_n: int = OD_MAX_N) -> float:
    """OD(X) = inf over kappa > 0 of max(OD(X; -kappa), kappa).

    OD(X; -kappa) only changes where 1 - kappa crosses a subset mass, and is
    right-continuous there, so the infimum is attained over those breakpoints
    or approached as kappa -> 0 (where OD equals diam X).
    """
    best = diam(X)
    for kappa in _mass_breakpoints(X):
        if kappa >= best:
            break
        res = obs_diam_exact(X, float(kappa), max_n=max_n, strict=True)
        best = min(best, max(res.value, float(kappa)))
    return best


def gaussian_mass(r: float) -> float:
    """I(r) = standard normal mass of [0, r], by adaptive quadrature."""
    if r <= 0:
        return 0.0
    val, _ = integrate.quad(lambda x: np.exp(-0.5 * x * x), 0.0, r,
                            epsabs=QUAD_TOL * 1e-2, epsrel=1e-13, limit=200)
    return val / np.sqrt(2 * np.pi)


def gaussian_mass_inverse(p: float) -> float:
    """Inverse of :func:`gaussian_mass` on [0, 1/2), by bisection."""
    if not 0 <= p < 0.5:
        raise ValueError("p must lie in [0, 1/2)")
    if p == 0:
        return 0.0
    lo, hi = 0.0, 1.0
    while gaussian_mass(hi) < p:
        hi *= 2
    while hi - lo > BISECT_TOL * 1e-2:
        mid = 0.5 * (lo + hi)
        if gaussian_mass(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def gaussian_obs_diam(lam: float, kappa: float) -> float:
    """2 lam I^{-1}((1 - kappa) / 2) for the infinite-dimensional Gaussian."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if not 0 < kappa < 1:
        raise ValueError("kappa must lie in (0, 1)")
    return 2.0 * lam * gaussian_mass_inverse((1.0 - kappa) / 2.0)


def discretize_gaussian_1d(lam: float, m: int) -> FiniteMMSpace:
    """m equal-mass atoms of N(0, lam^2) at the quantile midpoints, line metric."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if m == 1 or lam == 0:
        return one_point()
    x = lam * special.ndtri((np.arange(m) + 0.5) / m)
    d = np.abs(x[:, None] - x[None, :])
    w = np.full(m, 1.0 / m)
    if m > 200:
        # line metrics are valid by construction; skip the cubic triangle check
        return FiniteMMSpace([f"{v:.17g}" for v in x], d, w)
    return quotient_support(d, w, [f"{v:.17g}" for v in x])


def _sin_power_integral(k: int, upper: float) -> float:
    val, _ = integrate.quad(lambda t: np.sin(t) ** k, 0.0, upper,
                            epsabs=QUAD_TOL, epsrel=1e-12, limit=400)
    return val


def sphere_concentration_ratio(n: int) -> float:
    """Normalized mass of an open unit geodesic ball on the unit n-sphere."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return _sin_power_integral(n - 1, 1.0) / _sin_power_integral(n - 1, np.pi)


def sphere_box_lower(n: int) -> float:
    """Certified lower bound 1 - ratio on the box distance from S^n(1) to a point."""
    return 1.0 - sphere_concentration_ratio(n)
