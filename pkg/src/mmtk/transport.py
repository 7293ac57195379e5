"""Couplings, subtransport plans, Prokhorov distance and the Ky Fan metric."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import TAU_MASS, FiniteMMSpace
from .errors import MalformedSpace, NonProbabilityWeights


@dataclass(frozen=True, eq=False)
class Coupling:
    """Nonnegative matrix with prescribed (or dominated) marginals."""

    matrix: np.ndarray
    row_marginal: np.ndarray
    col_marginal: np.ndarray

    @property
    def mass(self) -> float:
        return float(self.matrix.sum())

    @property
    def deficiency(self) -> float:
        return 1.0 - self.mass

    def is_full(self, tol: float = TAU_MASS) -> bool:
        return (np.all(self.matrix >= -tol)
                and np.allclose(self.matrix.sum(1), self.row_marginal, atol=tol, rtol=0)
                and np.allclose(self.matrix.sum(0), self.col_marginal, atol=tol, rtol=0))

    def is_subtransport(self, tol: float = TAU_MASS) -> bool:
        return (np.all(self.matrix >= -tol)
                and np.all(self.matrix.sum(1) <= self.row_marginal + tol)
                and np.all(self.matrix.sum(0) <= self.col_marginal + tol))

    def mass_on(self, mask: np.ndarray) -> float:
        return float(self.matrix[mask].sum())


@dataclass(frozen=True, eq=False)
class MeasurePair:
    """Two probability vectors on one finite metric space."""

    ambient: FiniteMMSpace
    mu: np.ndarray
    nu: np.ndarray

    def __post_init__(self):
        for name in ("mu", "nu"):
            v = np.asarray(getattr(self, name), dtype=np.float64).copy()
            if v.shape != (self.ambient.n,):
                raise MalformedSpace(f"{name} must have one entry per ambient point")
            if np.any(v < 0) or abs(v.sum() - 1.0) > TAU_MASS:
                raise NonProbabilityWeights(f"{name} must be a probability vector")
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def from_matrix(cls, dist, mu, nu):
        d = np.asarray(dist, dtype=np.float64)
        n = d.shape[0]
        return cls(FiniteMMSpace([str(i) for i in range(n)], d, np.full(n, 1.0 / n)), mu, nu)


def max_flow_plan(allowed, mu, nu):
    """Largest subtransport plan between ``mu`` and ``nu`` supported on ``allowed``."""
    allowed = np.ascontiguousarray(allowed, dtype=np.bool_)
    mu = np.ascontiguousarray(mu, dtype=np.float64)
    nu = np.ascontiguousarray(nu, dtype=np.float64)
    flow = np.zeros(allowed.shape)
    mass = _kernels.bipartite_maxflow(allowed, mu, nu, flow)
    flow[flow < 0] = 0.0
    return float(mass), flow


def complete_coupling(plan, mu, nu):
    """Extend a subtransport plan to a full coupling by the product of residuals."""
    r = np.clip(mu - plan.sum(1), 0.0, None)
    c = np.clip(nu - plan.sum(0), 0.0, None)
    rest = r.sum()
    if rest <= 0:
        return plan.copy()
    return plan + np.outer(r, c) / rest


def max_subtransport_mass(pair: MeasurePair, eps: float):
    """Maximal mass of a subtransport plan supported on {d <= eps}; returns (mass, plan)."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    allowed = pair.ambient.dist <= eps
    mass, flow = max_flow_plan(allowed, pair.mu, pair.nu)
    # the reverse orientation gives the same optimum up to rounding; keeping
    # the larger of the two makes the result exactly symmetric in (mu, nu)
    back, flow_t = max_flow_plan(allowed.T, pair.nu, pair.mu)
    if back > mass:
        mass, flow = back, flow_t.T.copy()
    return min(mass, 1.0), Coupling(flow, pair.mu, pair.nu)


def _thresholds(values):
    return np.unique(np.concatenate([[0.0], np.asarray(values, dtype=np.float64).ravel()]))


def prokhorov_certificate(pair: MeasurePair):
    """Prokhorov distance with a Strassen witness.

    Returns (value, eps, plan): ``plan`` is an eps-subtransport plan with
    deficiency at most ``value`` and eps <= value.
    """
    best = (np.inf, 0.0, None)
    for eps in _thresholds(pair.ambient.dist):
        if eps >= best[0]:
            break
        mass, plan = max_subtransport_mass(pair, eps)
        value = max(eps, 1.0 - mass)
        if value < best[0]:
            best = (value, float(eps), plan)
    value, eps, plan = best
    return float(max(value, 0.0)), eps, plan


def prokhorov(pair: MeasurePair) -> float:
    return prokhorov_certificate(pair)[0]


def ky_fan(base_weights, images_f, images_g, ambient_metric) -> float:
    """Ky Fan distance between two maps from a finite weighted base set.

    The smallest eps >= 0 with mass{x : d(f x, g x) > eps} <= eps.  The
    infimum sits either at a pointwise distance or at a tail mass.
    """
    w = np.asarray(base_weights, dtype=np.float64)
    D = np.asarray(ambient_metric, dtype=np.float64)
    gaps = D[np.asarray(images_f, dtype=np.int64), np.asarray(images_g, dtype=np.int64)]
    order = np.argsort(gaps, kind="stable")
    gaps, w = gaps[order], w[order]
    best = np.inf
    for eps in _thresholds(gaps):
        tail = float(w[gaps > eps].sum())
        best = min(best, max(float(eps), tail))
    return best
