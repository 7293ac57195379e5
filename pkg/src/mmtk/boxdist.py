"""Box distance, Gromov-Prokhorov distance and distance to the one-point space.

The box distance between finite spaces is

    min over couplings pi and relations S of  max(dis S, 1 - pi(S)).

For a fixed distortion threshold delta the admissible relations are the
cliques of the graph on cells X x Y whose edges join cells that are mutually
within delta, and the best coupling mass on a clique is a max-flow value.
Both the clique mass m(delta) and the threshold are monotone, so
``box_exact`` binary-searches the sorted distortion values for the crossing
of delta and 1 - m(delta) and solves one optimisation problem next to it.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from ._accel import default_budget
from .core import FiniteMMSpace, scale
from .errors import SearchBudgetExceeded
from .transport import Coupling, complete_coupling, max_flow_plan

BOX_POINT_MAX_N = 15
_TIE = 1e-12


@dataclass(frozen=True, eq=False)
class Relation:
    """Subset of X x Y with its distortion cached."""

    pairs: tuple
    distortion: float

    @classmethod
    def build(cls, X: FiniteMMSpace, Y: FiniteMMSpace, pairs) -> "Relation":
        pairs = tuple(sorted((int(i), int(j)) for i, j in pairs))
        return cls(pairs, distortion(X, Y, pairs))

    def mask(self, m: int, n: int) -> np.ndarray:
        out = np.zeros((m, n), dtype=bool)
        for i, j in self.pairs:
            out[i, j] = True
        return out

    def __len__(self):
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class BoxCertificate:
    """A feasible (coupling, relation) pair and its objective value.

    ``certified`` is True when the search proved the value optimal.
    """

    value: float
    plan: Coupling
    relation: Relation
    certified: bool = True
    nodes: int = 0
    notes: dict = field(default_factory=dict)


def distortion(X: FiniteMMSpace, Y: FiniteMMSpace, pairs) -> float:
    if len(pairs) == 0:
        return 0.0
    idx = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    I, J = idx[:, 0], idx[:, 1]
    return float(np.max(np.abs(X.dist[np.ix_(I, I)] - Y.dist[np.ix_(J, J)])))


def box_objective(X, Y, plan: Coupling, relation: Relation) -> float:
    mass = plan.mass_on(relation.mask(X.n, Y.n))
    return max(relation.distortion, 1.0 - mass)


def max_coupling_mass_on(X: FiniteMMSpace, Y: FiniteMMSpace, S: Relation):
    """max pi(S) over full couplings pi; returns (mass, coupling)."""
    mask = S.mask(X.n, Y.n)
    mass, flow = max_flow_plan(mask, X.weight, Y.weight)
    plan = complete_coupling(flow, X.weight, Y.weight)
    return min(mass, 1.0), Coupling(plan, X.weight.copy(), Y.weight.copy())


def certificate_for(X, Y, pairs, certified=True, nodes=0) -> BoxCertificate:
    rel = Relation.build(X, Y, pairs)
    mass, plan = max_coupling_mass_on(X, Y, rel)
    return BoxCertificate(max(rel.distortion, 1.0 - mass), plan, rel, certified, nodes)


def pack_bits(mask: np.ndarray) -> np.ndarray:
    """Rows of a boolean matrix as little-endian uint64 bitsets."""
    N = mask.shape[1]
    W = max(1, (N + 63) // 64)
    raw = np.packbits(mask.astype(bool), axis=1, bitorder="little")
    raw = np.pad(raw, ((0, 0), (0, W * 8 - raw.shape[1])))
    return np.ascontiguousarray(raw).view("<u8").astype(np.uint64).reshape(mask.shape[0], W)


def unpack_bits(words: np.ndarray, N: int) -> np.ndarray:
    bits = np.unpackbits(np.ascontiguousarray(words, dtype="<u8").view(np.uint8), bitorder="little")
    return np.flatnonzero(bits[:N])


def _min_positive(d):
    pos = d[d > 0]
    return float(pos.min()) if pos.size else np.inf


class _CellProblem:
    """Cells of X x Y in mass-greedy order and their pairwise distortions."""

    def __init__(self, X: FiniteMMSpace, Y: FiniteMMSpace):
        self.X, self.Y = X, Y
        m, n = X.n, Y.n
        rows, cols = np.divmod(np.arange(m * n), n)
        prio = X.weight[rows] * Y.weight[cols]
        order = np.argsort(-prio, kind="stable")
        self.rows = np.ascontiguousarray(rows[order], dtype=np.int64)
        self.cols = np.ascontiguousarray(cols[order], dtype=np.int64)
        self.D = np.abs(X.dist[np.ix_(self.rows, self.rows)] - Y.dist[np.ix_(self.cols, self.cols)])
        self.values = np.unique(self.D)
        self.minpos_x = _min_positive(X.dist)
        self.minpos_y = _min_positive(Y.dist)
        self.mu = np.ascontiguousarray(X.weight)
        self.nu = np.ascontiguousarray(Y.weight)

    @property
    def N(self):
        return self.rows.shape[0]

    def search(self, delta, goal, decision, budget):
        adj = pack_bits(self.D <= delta)
        score, words, nodes, status = _kernels.cell_clique_search(
            adj, self.rows, self.cols, self.mu, self.nu, float(goal), bool(decision),
            bool(delta < self.minpos_y), bool(delta < self.minpos_x), int(budget))
        cells = unpack_bits(words, self.N) if score >= 0 else np.empty(0, np.int64)
        pairs = [(int(self.rows[c]), int(self.cols[c])) for c in cells]
        return float(score), pairs, int(nodes), int(status)


def _space_key(X):
    return (X.n, X.dist.tobytes(), X.weight.tobytes())


def transpose_certificate(cert: BoxCertificate, X: FiniteMMSpace,
                          Y: FiniteMMSpace) -> BoxCertificate:
    """Certificate for (Y, X) from one for (X, Y)."""
    plan = Coupling(cert.plan.matrix.T.copy(), cert.plan.col_marginal, cert.plan.row_marginal)
    rel = Relation(tuple(sorted((j, i) for i, j in cert.relation.pairs)), cert.relation.distortion)
    return BoxCertificate(cert.value, plan, rel, cert.certified, cert.nodes, dict(cert.notes))


def box_exact(X: FiniteMMSpace, Y: FiniteMMSpace, budget: int | None = None) -> BoxCertificate:
    """Exact box distance with an optimal (coupling, relation) certificate.

    If the node budget runs out the best known feasible certificate is
    returned with ``certified=False``.  The pair is solved in a canonical
    order so that box_exact(X, Y) and box_exact(Y, X) agree bit for bit.
    """
    if _space_key(Y) < _space_key(X):
        return transpose_certificate(_box_exact(Y, X, budget), Y, X)
    return _box_exact(X, Y, budget)


def _box_exact(X, Y, budget):
    budget = default_budget() if budget is None else int(budget)
    prob = _CellProblem(X, Y)
    incumbent = box_upper_certificate(X, Y, trials=8)
    if incumbent.value <= _TIE:
        return BoxCertificate(incumbent.value, incumbent.plan, incumbent.relation, True, 0)
    vals = prob.values
    k_top = int(np.searchsorted(vals, incumbent.value - _TIE, side="left"))
    used = 0
    found = {}

    def predicate(k):
        nonlocal used
        score, pairs, nodes, status = prob.search(vals[k], 1.0 - vals[k], True, budget - used)
        used += nodes
        if status:
            raise SearchBudgetExceeded("box_exact exceeded its node budget")
        if score >= 0:
            found[k] = pairs
            return True
        return False

    try:
        lo, hi = 0, k_top  # index k_top stands for the incumbent
        while lo < hi:
            mid = (lo + hi) // 2
            if predicate(mid):
                hi = mid
            else:
                lo = mid + 1
        if lo == k_top:
            best_value, best_pairs = incumbent.value, list(incumbent.relation.pairs)
        else:
            best_value, best_pairs = float(vals[lo]), found[lo]
        if lo > 0:
            score, pairs, nodes, status = prob.search(vals[lo - 1], 1.0 - best_value, False,
                                                      budget - used)
            used += nodes
            if status:
                raise SearchBudgetExceeded("box_exact exceeded its node budget")
            if score >= 0:
                best_pairs = pairs
    except SearchBudgetExceeded:
        return BoxCertificate(incumbent.value, incumbent.plan, incumbent.relation, False, used,
                              {"reason": "node budget exhausted"})
    cert = certificate_for(X, Y, best_pairs, True, used)
    if cert.value > incumbent.value:
        # numerical ties: never report worse than a feasible certificate in hand
        return BoxCertificate(incumbent.value, incumbent.plan, incumbent.relation, True, used)
    return cert


def _northwest(mu, nu):
    """North-west corner coupling of two ordered weight vectors."""
    m, n = len(mu), len(nu)
    plan = np.zeros((m, n))
    a, b = mu.astype(float).copy(), nu.astype(float).copy()
    i = j = 0
    while i < m and j < n:
        q = min(a[i], b[j])
        plan[i, j] = q
        a[i] -= q
        b[j] -= q
        if a[i] <= 1e-15 and i < m - 1:
            i += 1
        elif b[j] <= 1e-15 and j < n - 1:
            j += 1
        elif i == m - 1 and j == n - 1:
            break
        elif a[i] <= 1e-15:
            i += 1
        else:
            j += 1
    return plan


def _ordered_coupling(X, Y, ox, oy):
    sub = _northwest(X.weight[ox], Y.weight[oy])
    plan = np.zeros((X.n, Y.n))
    plan[np.ix_(ox, oy)] = sub
    return plan


def _candidate_couplings(X, Y, trials, rng):
    m, n = X.n, Y.n
    yield np.outer(X.weight, Y.weight)
    anchors = [(i, j) for i in range(m) for j in range(n)]
    if len(anchors) > 64:
        pick = rng.choice(len(anchors), size=64, replace=False)
        anchors = [anchors[k] for k in sorted(pick)]
    for i0, j0 in anchors:
        ox = np.lexsort((-X.weight, X.dist[i0]))
        oy = np.lexsort((-Y.weight, Y.dist[j0]))
        yield _ordered_coupling(X, Y, ox, oy)
    for _ in range(trials):
        yield _ordered_coupling(X, Y, rng.permutation(m), rng.permutation(n))


def box_upper_certificate(X: FiniteMMSpace, Y: FiniteMMSpace, trials: int = 16,
                          seed: int = 0) -> BoxCertificate:
    """Feasible certificate from greedy relation growth on heuristic couplings.

    Couplings: the product measure, monotone couplings of distance profiles
    around anchor pairs, and seeded random north-west corner couplings.  For
    each coupling and distortion level the support is grown greedily by mass
    and then padded with any further compatible cells.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    prob = _CellProblem(X, Y)
    cell_index = {(int(r), int(c)): k for k, (r, c) in enumerate(zip(prob.rows, prob.cols))}
    k_best = int(np.argmax(np.minimum(X.weight[prob.rows], Y.weight[prob.cols])))
    best = certificate_for(X, Y, [(int(prob.rows[k_best]), int(prob.cols[k_best]))], False)
    seen = set()
    for plan in _candidate_couplings(X, Y, trials, rng):
        supp = np.argwhere(plan > 1e-15)
        supp = supp[np.argsort(-plan[supp[:, 0], supp[:, 1]], kind="stable")]
        cells = np.array([cell_index[(int(i), int(j))] for i, j in supp], dtype=np.int64)
        levels = np.unique(prob.D[np.ix_(cells, cells)])
        if levels.size > 32:
            levels = np.unique(np.quantile(levels, np.linspace(0, 1, 32), method="nearest"))
        for delta in levels:
            if delta >= best.value:
                break
            ok = np.ones(prob.N, dtype=bool)
            chosen = []
            for c in list(cells) + list(range(prob.N)):
                if ok[c]:
                    chosen.append(c)
                    ok &= prob.D[c] <= delta
                    ok[c] = False
            key = tuple(sorted(chosen))
            if key in seen:
                continue
            seen.add(key)
            cert = certificate_for(X, Y, [(int(prob.rows[c]), int(prob.cols[c])) for c in chosen],
                                   False)
            if cert.value < best.value:
                best = cert
    return best


def box_upper(X: FiniteMMSpace, Y: FiniteMMSpace, trials: int = 16, seed: int = 0) -> float:
    return box_upper_certificate(X, Y, trials, seed).value


@dataclass(frozen=True)
class LowerBound:
    level: float
    certified: bool
    method: str
    mass_bound: float


def box_lower_bound(X: FiniteMMSpace, Y: FiniteMMSpace, level: float,
                    budget: int | None = None) -> LowerBound:
    """Try to certify box(X, Y) >= level.

    With delta the largest distortion value below ``level`` it suffices that
    every relation of distortion <= delta carries coupling mass <= 1 - level.
    When delta is below the smallest positive distance on both sides such
    relations are partial matchings, and the assignment problem bounds their
    mass.  When that relaxation is too weak the clique search decides it.
    """
    from scipy.optimize import linear_sum_assignment

    budget = default_budget() if budget is None else int(budget)
    prob = _CellProblem(X, Y)
    below = prob.values[prob.values < level]
    if below.size == 0:
        return LowerBound(level, level <= 0, "trivial", 0.0)
    delta = float(below[-1])
    need = 1.0 - level
    if delta < prob.minpos_x and delta < prob.minpos_y:
        w = np.minimum.outer(X.weight, Y.weight)
        r, c = linear_sum_assignment(w, maximize=True)
        bound = float(w[r, c].sum())
        if bound <= need + _TIE:
            return LowerBound(level, True, "matching", bound)
    score, _, _, status = prob.search(delta, need + 2 * _TIE, True, budget)
    if status:
        return LowerBound(level, False, "budget", 1.0)
    return LowerBound(level, score < 0, "clique", need if score < 0 else score)


def threshold_clique(X: FiniteMMSpace, diameter: float, goal: float, decision: bool,
                     budget: int):
    """Heaviest subset of diameter <= ``diameter`` (kernel wrapper).

    Returns (mass, indices, nodes, status) with mass -1 when nothing beats goal.
    """
    adj = pack_bits(X.dist <= diameter)
    score, words, nodes, status = _kernels.weighted_clique_search(
        adj, np.ascontiguousarray(X.weight), float(goal), bool(decision), int(budget))
    idx = unpack_bits(words, X.n) if score >= 0 else np.empty(0, np.int64)
    return float(score), idx, int(nodes), int(status)


def box_to_point(X: FiniteMMSpace, budget: int | None = None, max_n: int = BOX_POINT_MAX_N):
    """Box distance to the one-point space: min over A of max(diam A, 1 - mu(A)).

    Returns (value, A) with A an index array.
    """
    if X.n > max_n:
        raise SearchBudgetExceeded(f"box_to_point exact regime is n <= {max_n}, got {X.n}")
    budget = default_budget() if budget is None else int(budget)
    vals = np.unique(X.dist)
    used = 0
    found = {}

    def run(k, goal, decision):
        nonlocal used
        score, idx, nodes, status = threshold_clique(X, vals[k], goal, decision, budget - used)
        used += nodes
        if status:
            raise SearchBudgetExceeded("box_to_point exceeded its node budget")
        return score, idx

    lo, hi = 0, len(vals) - 1
    found[hi] = np.arange(X.n)
    while lo < hi:
        mid = (lo + hi) // 2
        score, idx = run(mid, 1.0 - vals[mid], True)
        if score >= 0:
            found[mid] = idx
            hi = mid
        else:
            lo = mid + 1
    best_idx = found[lo]
    best = max(float(vals[lo]), 1.0 - float(X.weight[best_idx].sum()))
    if lo > 0:
        score, idx = run(lo - 1, 1.0 - best, False)
        if score >= 0:
            best_idx = idx
    A = np.sort(best_idx)
    value = max(float(X.dist[np.ix_(A, A)].max()), 1.0 - float(X.weight[A].sum()))
    return value, A


def box_point_lower(X: FiniteMMSpace) -> float:
    """1 - max_x mu(open unit ball around x)."""
    return float(1.0 - np.max((X.dist < 1.0) @ X.weight))


def gromov_prokhorov(X: FiniteMMSpace, Y: FiniteMMSpace, budget: int | None = None) -> float:
    """d_GP(X, Y), computed as the box distance of the halved spaces."""
    return box_exact(scale(X, 0.5), scale(Y, 0.5), budget).value
