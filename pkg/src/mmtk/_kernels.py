"""Inner loops: max-flow, clique branch-and-bound, ordering scans.

Everything here takes and returns plain numpy arrays and scalars so the same
source compiles under numba or runs uncompiled (see :mod:`mmtk._accel`).
Bitsets are ``uint64`` word arrays; bit ``v`` lives in word ``v >> 6``.
"""
import numpy as np

from ._accel import jit

FLOW_EPS = 1e-14
_ONE = np.uint64(1)
_ZERO = np.uint64(0)


@jit
def triangle_violation(d, tol):
    """First (i, j, k) with d[i, k] > d[i, j] + d[j, k] + tol, else (-1, -1, -1)."""
    n = d.shape[0]
    for i in range(n):
        for k in range(n):
            dik = d[i, k]
            for j in range(n):
                excess = dik - d[i, j] - d[j, k]
                if excess > tol:
                    return i, j, k, excess
    return -1, -1, -1, 0.0


@jit
def bipartite_maxflow(allowed, mu, nu, flow):
    """Maximum flow from row supplies ``mu`` to column demands ``nu``.

    Edges are the True cells of ``allowed`` (uncapacitated).  ``flow`` must be
    a zeroed float array of the same shape and receives the optimal plan.
    Shortest augmenting paths (Edmonds-Karp), so the plan is deterministic.
    """
    m, n = allowed.shape
    row_out = np.zeros(m)
    col_in = np.zeros(n)
    parent_col = np.empty(n, np.int64)
    parent_row = np.empty(m, np.int64)
    seen_row = np.zeros(m, np.bool_)
    seen_col = np.zeros(n, np.bool_)
    queue = np.empty(m + n, np.int64)
    total = 0.0
    while True:
        seen_row[:] = False
        seen_col[:] = False
        head = 0
        tail = 0
        for i in range(m):
            if mu[i] - row_out[i] > FLOW_EPS:
                seen_row[i] = True
                parent_row[i] = -1
                queue[tail] = i
                tail += 1
        end = -1
        while head < tail and end < 0:
            u = queue[head]
            head += 1
            if u < m:
                for j in range(n):
                    if allowed[u, j] and not seen_col[j]:
                        seen_col[j] = True
                        parent_col[j] = u
                        if nu[j] - col_in[j] > FLOW_EPS:
                            end = j
                            break
                        queue[tail] = m + j
                        tail += 1
            else:
                j = u - m
                for i in range(m):
                    if not seen_row[i] and flow[i, j] > FLOW_EPS:
                        seen_row[i] = True
                        parent_row[i] = j
                        queue[tail] = i
                        tail += 1
        if end < 0:
            break
        # bottleneck along the path
        b = nu[end] - col_in[end]
        j = end
        while True:
            i = parent_col[j]
            pj = parent_row[i]
            if pj < 0:
                b = min(b, mu[i] - row_out[i])
                break
            b = min(b, flow[i, pj])
            j = pj
        j = end
        col_in[end] += b
        while True:
            i = parent_col[j]
            flow[i, j] += b
            pj = parent_row[i]
            if pj < 0:
                row_out[i] += b
                break
            flow[i, pj] -= b
            j = pj
        total += b
    return total


@jit
def _bit(words, v):
    return (words[v >> 6] >> np.uint64(v & 63)) & _ONE


@jit
def _is_empty(words):
    for w in range(words.shape[0]):
        if words[w] != _ZERO:
            return False
    return True


@jit
def _set_flow(words, cell_row, cell_col, mu, nu, row_single, col_single):
    m = mu.shape[0]
    n = nu.shape[0]
    allowed = np.zeros((m, n), np.bool_)
    rowmax = np.zeros(m)
    colmax = np.zeros(n)
    for v in range(cell_row.shape[0]):
        if _bit(words, v):
            i = cell_row[v]
            j = cell_col[v]
            allowed[i, j] = True
            if nu[j] > rowmax[i]:
                rowmax[i] = nu[j]
            if mu[i] > colmax[j]:
                colmax[j] = mu[i]
    rcap = mu.copy()
    ccap = nu.copy()
    if row_single:
        for i in range(m):
            rcap[i] = min(mu[i], rowmax[i])
    if col_single:
        for j in range(n):
            ccap[j] = min(nu[j], colmax[j])
    flow = np.zeros((m, n))
    return bipartite_maxflow(allowed, rcap, ccap, flow)


@jit
def cell_clique_search(adj, cell_row, cell_col, mu, nu, goal, decision,
                       row_single, col_single, budget):
    """Branch-and-bound over cliques of a cell compatibility graph.

    A clique is a relation S; its score is the maximal coupling mass on S.
    ``decision``: stop at the first clique scoring >= goal.  Otherwise return
    the best clique scoring > goal.  ``row_single``/``col_single`` tighten the
    bound when every clique is known to use at most one cell per row/column.

    Returns (score, clique words, nodes, status); score is -1 when nothing
    qualified and status is 1 when the node budget ran out.
    """
    N = adj.shape[0]
    W = adj.shape[1]
    stack_c = np.zeros((N + 2, W), np.uint64)
    stack_p = np.zeros((N + 2, W), np.uint64)
    for v in range(N):
        stack_p[0, v >> 6] |= _ONE << np.uint64(v & 63)
    top = 1
    best = goal
    found = False
    best_words = np.zeros(W, np.uint64)
    nodes = 0
    union = np.zeros(W, np.uint64)
    while top > 0:
        top -= 1
        c = stack_c[top].copy()
        p = stack_p[top].copy()
        nodes += 1
        if nodes > budget:
            return (best if found else -1.0), best_words, nodes, 1
        for w in range(W):
            union[w] = c[w] | p[w]
        bound = _set_flow(union, cell_row, cell_col, mu, nu, row_single, col_single)
        if decision:
            if bound < goal - 1e-12:
                continue
        elif bound <= best + 1e-12:
            continue
        # vertices compatible with the whole candidate set join for free
        for v in range(N):
            if _bit(p, v):
                universal = True
                for w in range(W):
                    if p[w] & ~adj[v, w] != _ZERO:
                        universal = False
                        break
                if universal:
                    c[v >> 6] |= _ONE << np.uint64(v & 63)
                    p[v >> 6] &= ~(_ONE << np.uint64(v & 63))
        if _is_empty(p):
            # c is a clique whose flow equals the bound computed above
            if decision:
                return bound, c, nodes, 0
            best = bound
            found = True
            best_words[:] = c
            continue
        pivot = -1
        for v in range(N):
            if _bit(p, v):
                pivot = v
                break
        mask = _ONE << np.uint64(pivot & 63)
        # exclude branch
        stack_c[top] = c
        stack_p[top] = p
        stack_p[top, pivot >> 6] &= ~mask
        top += 1
        # include branch (explored first)
        stack_c[top] = c
        stack_c[top, pivot >> 6] |= mask
        for w in range(W):
            stack_p[top, w] = p[w] & adj[pivot, w]
        stack_p[top, pivot >> 6] &= ~mask
        top += 1
    if decision:
        return -1.0, best_words, nodes, 0
    return (best if found else -1.0), best_words, nodes, 0


@jit
def weighted_clique_search(adj, weight, goal, decision, budget):
    """Max-weight clique by branch-and-bound; same contract as cell_clique_search."""
    N = adj.shape[0]
    W = adj.shape[1]
    stack_c = np.zeros((N + 2, W), np.uint64)
    stack_p = np.zeros((N + 2, W), np.uint64)
    for v in range(N):
        stack_p[0, v >> 6] |= _ONE << np.uint64(v & 63)
    top = 1
    best = goal
    found = False
    best_words = np.zeros(W, np.uint64)
    nodes = 0
    while top > 0:
        top -= 1
        c = stack_c[top].copy()
        p = stack_p[top].copy()
        nodes += 1
        if nodes > budget:
            return (best if found else -1.0), best_words, nodes, 1
        bound = 0.0
        for v in range(N):
            if _bit(c, v) or _bit(p, v):
                bound += weight[v]
        if decision:
            if bound < goal - 1e-12:
                continue
        elif bound <= best + 1e-12:
            continue
        for v in range(N):
            if _bit(p, v):
                universal = True
                for w in range(W):
                    if p[w] & ~adj[v, w] != _ZERO:
                        universal = False
                        break
                if universal:
                    c[v >> 6] |= _ONE << np.uint64(v & 63)
                    p[v >> 6] &= ~(_ONE << np.uint64(v & 63))
        if _is_empty(p):
            if decision:
                return bound, c, nodes, 0
            best = bound
            found = True
            best_words[:] = c
            continue
        pivot = -1
        for v in range(N):
            if _bit(p, v):
                pivot = v
                break
        mask = _ONE << np.uint64(pivot & 63)
        stack_c[top] = c
        stack_p[top] = p
        stack_p[top, pivot >> 6] &= ~mask
        top += 1
        stack_c[top] = c
        stack_c[top, pivot >> 6] |= mask
        for w in range(W):
            stack_p[top, w] = p[w] & adj[pivot, w]
        stack_p[top, pivot >> 6] &= ~mask
        top += 1
    if decision:
        return -1.0, best_words, nodes, 0
    return (best if found else -1.0), best_words, nodes, 0


@jit
def _next_permutation(a):
    n = a.shape[0]
    i = n - 2
    while i >= 0 and a[i] >= a[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = n - 1
    while a[j] <= a[i]:
        j -= 1
    a[i], a[j] = a[j], a[i]
    lo = i + 1
    hi = n - 1
    while lo < hi:
        a[lo], a[hi] = a[hi], a[lo]
        lo += 1
        hi -= 1
    return True


@jit
def _minimal_windows(weight, sigma, alpha, wa, wb):
    """Fill minimal position windows [a, b] of ``sigma`` with mass >= alpha."""
    n = sigma.shape[0]
    count = 0
    for a in range(n):
        mass = 0.0
        b = a
        while b < n:
            mass += weight[sigma[b]]
            if mass >= alpha - 1e-12:
                break
            b += 1
        if b == n:
            break
        if mass - weight[sigma[a]] >= alpha - 1e-12:
            continue
        wa[count] = a
        wb[count] = b
        count += 1
    return count


@jit
def _ordering_feasible(base, sigma, wa, wb, nw, t, eps, dmat):
    n = base.shape[0]
    dmat[:, :] = base
    for k in range(nw):
        u = sigma[wb[k]]
        v = sigma[wa[k]]
        if -t < dmat[u, v]:
            dmat[u, v] = -t
    for k in range(n):
        for i in range(n):
            dik = dmat[i, k]
            for j in range(n):
                s = dik + dmat[k, j]
                if s < dmat[i, j]:
                    dmat[i, j] = s
    for v in range(n):
        if dmat[v, v] < -eps:
            return False
    return True


@jit
def ordering_base(d, sigma):
    """Difference-constraint matrix: Lipschitz bounds plus f nondecreasing along sigma."""
    n = d.shape[0]
    base = d.copy()
    for i in range(n):
        base[i, i] = 0.0
    for k in range(n - 1):
        u = sigma[k + 1]
        v = sigma[k]
        if base[u, v] > 0.0:
            base[u, v] = 0.0
    return base


@jit
def ordering_value(d, weight, sigma, alpha, lower, hi, tol):
    """Largest t <= hi such that some 1-Lipschitz f sorted by sigma has all
    minimal alpha-windows of range >= t.  Returns -1 if t <= lower is forced."""
    n = d.shape[0]
    wa = np.empty(n, np.int64)
    wb = np.empty(n, np.int64)
    nw = _minimal_windows(weight, sigma, alpha, wa, wb)
    dmat = np.empty((n, n))
    base = ordering_base(d, sigma)
    eps = 1e-13 * (1.0 + hi)
    if nw == 0:
        return -1.0
    if not _ordering_feasible(base, sigma, wa, wb, nw, lower + tol, eps, dmat):
        return -1.0
    lo = lower + tol
    if _ordering_feasible(base, sigma, wa, wb, nw, hi, eps, dmat):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _ordering_feasible(base, sigma, wa, wb, nw, mid, eps, dmat):
            lo = mid
        else:
            hi = mid
    return lo


@jit
def obs_diam_search(d, weight, alpha, diam, tol):
    """Max over orderings of :func:`ordering_value`; returns (value, ordering)."""
    n = d.shape[0]
    sigma = np.arange(n)
    best = 0.0
    best_sigma = sigma.copy()
    if n < 2:
        return best, best_sigma
    while True:
        if sigma[0] < sigma[n - 1]:
            t = ordering_value(d, weight, sigma, alpha, best, diam, tol)
            if t > best:
                best = t
                best_sigma[:] = sigma
        if not _next_permutation(sigma):
            break
    return best, best_sigma


@jit
def line_partial_diam(pos, mass, alpha):
    """Shortest window [pos[a], pos[b]] with mass >= alpha; pos sorted ascending."""
    n = pos.shape[0]
    if alpha <= 0.0:
        return 0.0
    best = np.inf
    acc = 0.0
    a = 0
    for b in range(n):
        acc += mass[b]
        while a < b and acc - mass[a] >= alpha - 1e-12:
            acc -= mass[a]
            a += 1
        if acc >= alpha - 1e-12:
            span = pos[b] - pos[a]
            if span < best:
                best = span
    return best
