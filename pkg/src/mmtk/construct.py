"""Explicit constructions on finite mm-spaces.

Products, metric transforms, monotone interpolation, gluing along a
relation, the Kuratowski embedding, box-distance midpoints and the paths
built from them, branching families of geodesics, and discrete nets.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .boxdist import (BoxCertificate, Relation, box_exact, box_lower_bound, box_to_point,
                      box_upper_certificate, distortion)
from .core import (TAU_METRIC, FiniteMMSpace, PointMap, diam,
                   quotient_map, quotient_support, scale, validate_space)
from .errors import (MalformedSpace, MetricPreservationViolated, MidpointCheckFailed,
                     RelationTooDistorted, SearchBudgetExceeded, SizeOverflow, ValidationError)

SIZE_CAP = 4096
VALIDATE_MAX_N = 256
MASS_FLOOR = 1e-12


def _trusted_or_validated(labels, d, w):
    # products and transforms of metrics are metrics; the cubic check is only
    # worth running on small outputs
    if len(labels) <= VALIDATE_MAX_N:
        return validate_space(d, w, labels)
    return FiniteMMSpace(labels, d, w)


def l_p_product(X: FiniteMMSpace, Y: FiniteMMSpace, p: float = np.inf,
                cap: int = SIZE_CAP) -> FiniteMMSpace:
    """X x Y with the l_p combination of the factor metrics and the product measure.

    Point (a, b) sits at index a * |Y| + b and is labeled "(a,b)".
    """
    p = float(p)
    if not p >= 1:
        raise ValueError("p must be >= 1 or inf")
    n = X.n * Y.n
    if n > cap:
        raise SizeOverflow(f"product has {n} points, cap is {cap}")
    dx = np.repeat(np.repeat(X.dist, Y.n, axis=0), Y.n, axis=1)
    dy = np.tile(Y.dist, (X.n, X.n))
    if np.isinf(p):
        d = np.maximum(dx, dy)
    elif p == 1:
        d = dx + dy
    else:
        d = (dx ** p + dy ** p) ** (1.0 / p)
    w = np.outer(X.weight, Y.weight).ravel()
    labels = [f"({a},{b})" for a in X.labels for b in Y.labels]
    return _trusted_or_validated(labels, d, w)


@dataclass(frozen=True)
class TransformSpec:
    """A nondecreasing metric-preserving function F with F(0) = 0.

    kinds: ``linear`` (params (t,)), ``truncate`` (params (c,)), and
    ``concave_pl`` (params: flat breakpoints x1, y1, x2, y2, ...; the
    function starts at the origin, interpolates linearly and stays flat
    after the last breakpoint).
    """

    kind: str
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        if self.kind in ("linear", "truncate"):
            if len(self.params) != 1 or not (self.params[0] >= 0 and np.isfinite(self.params[0])):
                raise MetricPreservationViolated(f"{self.kind} needs one finite parameter >= 0")
        elif self.kind == "concave_pl":
            xs, ys = self._knots()
            if len(self.params) % 2 or len(xs) < 2:
                raise MetricPreservationViolated("concave_pl needs pairs of breakpoints")
            if np.any(np.diff(xs) <= 0):
                raise MetricPreservationViolated("breakpoint abscissae must increase from 0")
            slopes = np.append(np.diff(ys) / np.diff(xs), 0.0)
            if slopes[0] <= 0 or np.any(slopes < 0) or np.any(np.diff(slopes) > 1e-12):
                raise MetricPreservationViolated("slopes must be positive at 0, nonnegative "
                                                 "and nonincreasing")
        else:
            raise MetricPreservationViolated(f"unknown transform kind {self.kind!r}")

    @classmethod
    def linear(cls, t: float) -> "TransformSpec":
        return cls("linear", (t,))

    @classmethod
    def truncate(cls, c: float) -> "TransformSpec":
        return cls("truncate", (c,))

    @classmethod
    def concave_pl(cls, breakpoints) -> "TransformSpec":
        return cls("concave_pl", tuple(v for xy in breakpoints for v in xy))

    def _knots(self):
        pts = np.asarray(self.params, dtype=np.float64).reshape(-1, 2)
        return np.concatenate([[0.0], pts[:, 0]]), np.concatenate([[0.0], pts[:, 1]])

    def __call__(self, s):
        s = np.asarray(s, dtype=np.float64)
        if self.kind == "linear":
            return self.params[0] * s
        if self.kind == "truncate":
            return np.minimum(s, self.params[0])
        xs, ys = self._knots()
        return np.interp(s, xs, ys)


def retraction_transform(t: float) -> TransformSpec:
    """F_t(s) = min(s, t / (1 - t)); identity at t = 1, constant zero at t = 0."""
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    if t == 1:
        return TransformSpec.linear(1.0)
    return TransformSpec.truncate(t / (1.0 - t))


def transform(X: FiniteMMSpace, F: TransformSpec) -> FiniteMMSpace:
    """F(X) = (X, F o d_X, mu_X); pairs sent to 0 are identified."""
    d = F(X.dist)
    try:
        if np.any(d + np.eye(X.n) <= TAU_METRIC):
            return quotient_support(d, X.weight, X.labels)
        return validate_space(d, X.weight, X.labels)
    except ValidationError as exc:
        raise MetricPreservationViolated(f"{F} broke the metric axioms: {exc}") from exc


def interpolate_dominated(f: PointMap, t: float, tol: float = TAU_METRIC) -> FiniteMMSpace:
    """Space on X_1 with metric (1 - t) d_{X_0}(f x, f x') + t d_{X_1}(x, x').

    ``f`` maps X_1 onto X_0 and must be 1-Lipschitz and measure preserving.
    """
    if not 0 <= t <= 1:
        raise ValueError("t must lie in [0, 1]")
    f.verify(tol)
    X1, X0 = f.source, f.target
    a = f.assignment
    d = (1.0 - t) * X0.dist[np.ix_(a, a)] + t * X1.dist
    if t == 0:
        return quotient_support(d, X1.weight, X1.labels)
    return FiniteMMSpace(X1.labels, d, X1.weight)


@dataclass(frozen=True, eq=False)
class GluedSpace:
    ambient: FiniteMMSpace
    left_index: np.ndarray
    right_index: np.ndarray


def glue(X0: FiniteMMSpace, X1: FiniteMMSpace, S: Relation, c: float,
         tol: float = TAU_METRIC) -> GluedSpace:
    """Disjoint union with doubled metrics joined across S at cost c.

    cross(x, y) = min over (x', y') in S of 2 d0(x, x') + c + 2 d1(y', y).
    The weight is the average of the two measures.
    """
    pairs = np.asarray(sorted(S.pairs), dtype=np.int64).reshape(-1, 2)
    if pairs.size == 0:
        raise MalformedSpace("cannot glue along an empty relation")
    dis = distortion(X0, X1, S.pairs)
    if c < dis - tol:
        raise RelationTooDistorted(f"c = {c!r} is below the distortion {dis!r}")
    m, n = X0.n, X1.n
    I, J = pairs[:, 0], pairs[:, 1]
    cross = np.min(2 * X0.dist[:, I][:, None, :] + c + 2 * X1.dist[J, :].T[None, :, :], axis=2)
    d = np.zeros((m + n, m + n))
    d[:m, :m] = 2 * X0.dist
    d[m:, m:] = 2 * X1.dist
    d[:m, m:] = cross
    d[m:, :m] = cross.T
    w = np.concatenate([0.5 * X0.weight, 0.5 * X1.weight])
    labels = [f"L:{s}" for s in X0.labels] + [f"R:{s}" for s in X1.labels]
    space, mapping = quotient_map(d, w, labels)
    return GluedSpace(space, mapping[:m].copy(), mapping[m:].copy())


def kuratowski(Z: FiniteMMSpace) -> np.ndarray:
    """Coordinates x -> (d(x, z_j))_j; sup-norm distances reproduce d_Z."""
    return np.array(Z.dist, copy=True)


def _sup_dist(P):
    return np.max(np.abs(P[:, None, :] - P[None, :, :]), axis=2)


@dataclass
class MidpointReport:
    r: float
    to_left: float
    to_right: float
    certified: bool
    tol: float
    ok: bool
    certificate: BoxCertificate
    note: str = ("one construction at r = box distance; a minimizing certificate "
                 "exists on finite spaces so no limit sequence is needed")


def _midpoint_space(X0, X1, cert: BoxCertificate):
    S = cert.relation
    c = S.distortion
    G = glue(X0, X1, S, c)
    K = kuratowski(G.ambient)
    plan = np.where(S.mask(X0.n, X1.n), cert.plan.matrix, 0.0)
    left = 0.5 * np.clip(X0.weight - plan.sum(1), 0.0, None)
    right = 0.5 * np.clip(X1.weight - plan.sum(0), 0.0, None)
    pts, mass, labels = [], [], []
    for i in range(X0.n):
        pts.append(K[G.left_index[i]])
        mass.append(left[i])
        labels.append(f"L:{X0.labels[i]}")
    for j in range(X1.n):
        pts.append(K[G.right_index[j]])
        mass.append(right[j])
        labels.append(f"R:{X1.labels[j]}")
    for i, j in sorted(S.pairs):
        pts.append(0.5 * (K[G.left_index[i]] + K[G.right_index[j]]))
        mass.append(plan[i, j])
        labels.append(f"M:{X0.labels[i]}|{X1.labels[j]}")
    pts = np.array(pts)
    mass = np.array(mass)
    keep = mass >= MASS_FLOOR
    pts, mass = pts[keep], mass[keep] / mass[keep].sum()
    labels = [s for s, k in zip(labels, keep) if k]
    return quotient_support(0.5 * _sup_dist(pts), mass, labels)


def midpoint(X0: FiniteMMSpace, X1: FiniteMMSpace, budget: Optional[int] = None,
             tol: float = 1e-9, check: bool = True):
    """A box-distance midpoint of X0 and X1, with a re-check report.

    The optimal certificate (pi, S) is used to glue the doubled spaces along
    S; points of the coupling are replaced by sup-norm midpoints of their
    Kuratowski images, the uncoupled remainders are split evenly between the
    two copies, and the result carries half the sup-norm metric.
    """
    cert = box_exact(X0, X1, budget)
    if not cert.certified:
        raise SearchBudgetExceeded("midpoint needs a certified box distance", best=cert.value)
    Xh = _midpoint_space(X0, X1, cert)
    a = box_exact(X0, Xh, budget)
    b = box_exact(X1, Xh, budget)
    r = cert.value
    bound = 0.5 * r + tol
    ok = a.value <= bound and b.value <= bound
    report = MidpointReport(r, a.value, b.value, a.certified and b.certified, tol, ok, cert)
    # uncertified values are upper bounds, so a pass is still a pass
    if check and not ok and a.certified and b.certified:
        raise MidpointCheckFailed((r, a.value, b.value))
    return Xh, report


@dataclass(frozen=True, eq=False)
class PathSample:
    entries: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        ts = [float(t) for t, _ in self.entries]
        if not ts or ts[0] != 0.0 or ts[-1] != 1.0:
            raise MalformedSpace("a path sample needs both endpoints t = 0 and t = 1")
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise MalformedSpace("path parameters must increase strictly")

    @property
    def times(self):
        return [float(t) for t, _ in self.entries]

    @property
    def spaces(self):
        return [X for _, X in self.entries]

    def at(self, t: float) -> FiniteMMSpace:
        for s, X in self.entries:
            if float(s) == float(t):
                return X
        raise KeyError(t)


def geodesic_dyadic(X0: FiniteMMSpace, X1: FiniteMMSpace, depth: int,
                    budget: Optional[int] = None, tol: float = 1e-6) -> PathSample:
    """Path sampled at k / 2^depth by recursive midpoints."""
    if not 0 <= depth <= 3:
        raise ValueError("depth must lie in 0..3")
    pts = {Fraction(0): X0, Fraction(1): X1}
    r = None
    for _ in range(depth):
        keys = sorted(pts)
        for a, b in zip(keys, keys[1:]):
            pts[(a + b) / 2], rep = midpoint(pts[a], pts[b], budget, tol=tol)
            if r is None:
                r = rep.r
    if r is None:
        r = box_exact(X0, X1, budget).value
    entries = tuple((float(t), pts[t]) for t in sorted(pts))
    return PathSample(entries, {"construction": "dyadic-midpoint", "depth": depth, "r": r})


def path_report(path: PathSample, r: float, budget: Optional[int] = None,
                upper_trials: int = 8):
    """Box distance between every pair of samples against |t - t'| r.

    Uses box_exact; if the budget runs out the heuristic upper bound is
    reported with certified=False (an upper bound still proves the inequality).
    """
    rows = []
    ents = path.entries
    for a in range(len(ents)):
        for b in range(a + 1, len(ents)):
            (t, X), (s, Y) = ents[a], ents[b]
            try:
                cert = box_exact(X, Y, budget)
            except SearchBudgetExceeded:
                cert = box_upper_certificate(X, Y, trials=upper_trials)
                cert = BoxCertificate(cert.value, cert.plan, cert.relation, False)
            rows.append({"t": t, "s": s, "value": cert.value, "bound": abs(s - t) * r,
                         "certified": cert.certified})
    return rows


def unit_interval_space(k: int = 3) -> FiniteMMSpace:
    """k equal atoms at the cell centres (i + 1/2) / k of [0, 1]."""
    x = (np.arange(k) + 0.5) / k
    return validate_space(np.abs(x[:, None] - x[None, :]), np.full(k, 1.0 / k),
                          [f"{v:.6g}" for v in x])


def branch_family(path: PathSample, s: float, Z: Optional[FiniteMMSpace] = None,
                  r: Optional[float] = None, budget: Optional[int] = None,
                  cap: int = SIZE_CAP) -> PathSample:
    """Y_t = X_t x_inf (s f(t)) Z with f(t) = r min(t, 1 - t)."""
    if not 0 <= s <= 1:
        raise ValueError("s must lie in [0, 1]")
    Z = unit_interval_space() if Z is None else Z
    if not 0 < diam(Z) <= 1 + TAU_METRIC:
        raise MalformedSpace("Z must have diameter in (0, 1]")
    if r is None:
        r = box_exact(path.spaces[0], path.spaces[-1], budget).value
    out = []
    for t, X in path.entries:
        h = s * r * min(t, 1.0 - t)
        out.append((t, X if h == 0 else l_p_product(X, scale(Z, h), np.inf, cap)))
    return PathSample(tuple(out), {"construction": "branch", "s": s, "r": r,
                                   "parent": path.meta.get("construction")})


def equilateral(n: int, eps: float) -> FiniteMMSpace:
    d = eps * (1.0 - np.eye(n))
    return FiniteMMSpace([str(i + 1) for i in range(n)], d, np.full(n, 1.0 / n))


def discrete_net(Xdot: FiniteMMSpace, eps: float, count: int,
                 cap: int = SIZE_CAP) -> list:
    """X_n = Xdot x_inf Y_n, Y_n the equilateral eps-space on (2N)^n points."""
    if not eps > 0:
        raise ValueError("eps must be positive")
    N = Xdot.n
    out = []
    for k in range(1, count + 1):
        size = (2 * N) ** k
        if N * size > cap:
            raise SizeOverflow(f"X_{k} would have {N * size} points, cap is {cap}")
        out.append(l_p_product(Xdot, equilateral(size, eps), np.inf, cap))
    return out


def net_report(Xdot: FiniteMMSpace, eps: float, nets: list, budget: Optional[int] = None):
    """Certified pairwise lower bounds and upper bounds towards Xdot.

    Lower bound level: min(eps, smallest positive distance of Xdot, 1/2).
    Upper bound: the heuristic certificate for box(X_n, Xdot), compared with
    box(Y_n, *) computed exactly while Y_n is small.
    """
    off = Xdot.dist[Xdot.dist > 0]
    level = min(eps, float(off.min()) if off.size else np.inf, 0.5)
    lower = []
    for a in range(len(nets)):
        for b in range(a + 1, len(nets)):
            lb = box_lower_bound(nets[a], nets[b], level, budget)
            lower.append({"m": a + 1, "n": b + 1, "level": level, "certified": lb.certified,
                          "method": lb.method})
    upper = []
    for k, X in enumerate(nets, start=1):
        cert = box_upper_certificate(X, Xdot, trials=4)
        size = X.n // Xdot.n
        if size <= 64:
            y_point = box_to_point(equilateral(size, eps), budget, max_n=64)[0]
        else:
            y_point = min(eps, 1.0 - 1.0 / size)
        upper.append({"n": k, "upper": cert.value, "y_to_point": y_point,
                      "relation": sorted(cert.relation.pairs)})
    return {"eps": eps, "lower": lower, "upper": upper}
