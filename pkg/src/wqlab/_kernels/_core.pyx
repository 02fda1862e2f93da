# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled transport kernels.

Costs are never materialized: every arc cost is recomputed from the point
coordinates, so memory stays linear in the number of atoms.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, pow, sqrt, INFINITY

cnp.import_array()

DEF L1 = 0
DEF L2 = 1
DEF LINF = 2


cdef inline double _dist(const double[:, ::1] X, Py_ssize_t i,
                         const double[:, ::1] Y, Py_ssize_t j,
                         Py_ssize_t d, int norm, double p) noexcept nogil:
    cdef double acc = 0.0, t
    cdef Py_ssize_t k
    if norm == LINF:
        for k in range(d):
            t = fabs(X[i, k] - Y[j, k])
            if t > acc:
                acc = t
    elif norm == L1:
        for k in range(d):
            acc += fabs(X[i, k] - Y[j, k])
    else:
        for k in range(d):
            t = X[i, k] - Y[j, k]
            acc += t * t
        if p == 2.0:
            return acc
        acc = sqrt(acc)
    if p == 1.0:
        return acc
    if p == 2.0:
        return acc * acc
    return pow(acc, p)


def pair_costs(const double[:, ::1] X, const double[:, ::1] Y,
               const cnp.int64_t[::1] rows, const cnp.int64_t[::1] cols,
               int norm, double p):
    """Costs ``|X[rows[k]] - Y[cols[k]]|^p`` for a list of index pairs."""
    cdef Py_ssize_t n = rows.shape[0], k, d = X.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for k in range(n):
            o[k] = _dist(X, rows[k], Y, cols[k], d, norm, p)
    return out


def c_transform(const double[:, ::1] X, const double[:, ::1] Y,
                const double[::1] price, int norm, double p):
    """``min_j (c(x_i, y_j) + price_j)`` for every source point."""
    cdef Py_ssize_t n1 = X.shape[0], n2 = Y.shape[0], d = X.shape[1], i, j
    cdef double best, v
    out = np.empty(n1, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n1):
            best = INFINITY
            for j in range(n2):
                v = _dist(X, i, Y, j, d, norm, p) + price[j]
                if v < best:
                    best = v
            o[i] = best
    return out


def network_simplex(const double[::1] supply_src, const double[::1] demand_tgt,
                    const double[:, ::1] X, const double[:, ::1] Y,
                    int norm, double p, double cost_scale,
                    long long max_pivots):
    """Primal network simplex on the complete bipartite transport graph.

    Uses an artificial root with big-M arcs, a strongly feasible spanning
    tree (Cunningham's leaving-arc rule) and block-search pricing over the
    implicit arc set. Flows live only on tree arcs, so every array is
    O(n1 + n2).

    Returns ``(rows, cols, flows, potentials, n_pivots, converged)``.
    """
    cdef Py_ssize_t n1 = X.shape[0], n2 = Y.shape[0], d = X.shape[1]
    cdef Py_ssize_t n = n1 + n2, root = n1 + n2
    cdef long long E = <long long>n1 * <long long>n2
    cdef double art = 2.0 * cost_scale if cost_scale > 0 else 1.0
    cdef double tol = 1e-13 * (cost_scale if cost_scale > 0 else 1.0)

    parent_a = np.empty(n + 1, dtype=np.int64)
    pred_a = np.empty(n + 1, dtype=np.int64)
    up_a = np.zeros(n + 1, dtype=np.int8)
    flow_a = np.zeros(n + 1, dtype=np.float64)
    pot_a = np.zeros(n + 1, dtype=np.float64)
    depth_a = np.zeros(n + 1, dtype=np.int64)
    first_a = np.full(n + 1, -1, dtype=np.int64)
    next_a = np.full(n + 1, -1, dtype=np.int64)
    prev_a = np.full(n + 1, -1, dtype=np.int64)

    cdef cnp.int64_t[::1] parent = parent_a
    cdef cnp.int64_t[::1] pred = pred_a
    cdef cnp.int8_t[::1] up = up_a
    cdef double[::1] flow = flow_a
    cdef double[::1] pot = pot_a
    cdef cnp.int64_t[::1] depth = depth_a
    cdef cnp.int64_t[::1] first = first_a
    cdef cnp.int64_t[::1] nxt = next_a
    cdef cnp.int64_t[::1] prv = prev_a

    cdef Py_ssize_t u, v, x, y, q, join, s_in, s_out, prev_node, old_parent
    cdef long long e, best, k, cnt, block, old_arc, new_arc, pivots = 0
    cdef Py_ssize_t ci, cj
    cdef double rc, best_rc, delta, shift, c, s, old_flow, new_flow
    cdef int on_u, converged = 0
    cdef cnp.int8_t old_up, new_up

    # initial tree: every node hangs off the root through its artificial arc
    parent[root] = -1
    pred[root] = -1
    depth[root] = 0
    for u in range(n):
        s = supply_src[u] if u < n1 else -demand_tgt[u - n1]
        parent[u] = root
        pred[u] = E + u
        depth[u] = 1
        if s >= 0:
            up[u] = 1
            flow[u] = s
            pot[u] = -art
        else:
            up[u] = 0
            flow[u] = -s
            pot[u] = art
        nxt[u] = first[root]
        prv[u] = -1
        if first[root] != -1:
            prv[first[root]] = u
        first[root] = u

    block = <long long>sqrt(<double>E)
    if block < 16:
        block = 16
    ci = 0
    cj = 0

    with nogil:
        while pivots < max_pivots:
            # block-search pricing over the implicit arc list
            best = -1
            best_rc = -tol
            cnt = 0
            for k in range(E):
                rc = _dist(X, ci, Y, cj, d, norm, p) + pot[ci] - pot[n1 + cj]
                if rc < best_rc:
                    best_rc = rc
                    best = <long long>ci * n2 + cj
                cj += 1
                if cj == n2:
                    cj = 0
                    ci += 1
                    if ci == n1:
                        ci = 0
                cnt += 1
                if cnt == block:
                    if best >= 0:
                        break
                    cnt = 0
            if best < 0:
                converged = 1
                break
            pivots += 1

            u = <Py_ssize_t>(best // n2)
            v = n1 + <Py_ssize_t>(best - (best // n2) * n2)
            c = _dist(X, u, Y, v - n1, d, norm, p)
            rc = c + pot[u] - pot[v]

            # apex of the pivot cycle
            x = u
            y = v
            while depth[x] > depth[y]:
                x = parent[x]
            while depth[y] > depth[x]:
                y = parent[y]
            while x != y:
                x = parent[x]
                y = parent[y]
            join = x

            # last blocking arc when traversing from the apex
            delta = INFINITY
            q = -1
            on_u = 0
            x = u
            while x != join:
                if up[x] and flow[x] < delta:
                    delta = flow[x]
                    q = x
                    on_u = 1
                x = parent[x]
            x = v
            while x != join:
                if (not up[x]) and flow[x] <= delta:
                    delta = flow[x]
                    q = x
                    on_u = 0
                x = parent[x]

            # augment
            x = u
            while x != join:
                if up[x]:
                    flow[x] -= delta
                else:
                    flow[x] += delta
                x = parent[x]
            x = v
            while x != join:
                if up[x]:
                    flow[x] += delta
                else:
                    flow[x] -= delta
                x = parent[x]

            if on_u:
                s_in = u
                s_out = v
                new_up = 1
                shift = -rc
            else:
                s_in = v
                s_out = u
                new_up = 0
                shift = rc

            # re-hang the subtree below q from the entering arc
            prev_node = s_out
            new_arc = best
            new_flow = delta
            x = s_in
            while True:
                old_parent = parent[x]
                old_arc = pred[x]
                old_up = up[x]
                old_flow = flow[x]
                if prv[x] != -1:
                    nxt[prv[x]] = nxt[x]
                else:
                    first[old_parent] = nxt[x]
                if nxt[x] != -1:
                    prv[nxt[x]] = prv[x]
                parent[x] = prev_node
                pred[x] = new_arc
                up[x] = new_up
                flow[x] = new_flow
                nxt[x] = first[prev_node]
                prv[x] = -1
                if first[prev_node] != -1:
                    prv[first[prev_node]] = x
                first[prev_node] = x
                if x == q:
                    break
                new_arc = old_arc
                new_up = 1 - old_up
                new_flow = old_flow
                prev_node = x
                x = old_parent

            # shift potentials and depths over the moved subtree
            x = s_in
            while True:
                pot[x] += shift
                depth[x] = depth[parent[x]] + 1
                if first[x] != -1:
                    x = first[x]
                    continue
                while x != s_in and nxt[x] == -1:
                    x = parent[x]
                if x == s_in:
                    break
                x = nxt[x]

    # collect positive flows on original tree arcs
    rows_l = []
    cols_l = []
    flows_l = []
    for x in range(n):
        e = pred[x]
        if e < E and flow[x] > 0:
            rows_l.append(e // n2)
            cols_l.append(e % n2)
            flows_l.append(flow[x])
    return (np.asarray(rows_l, dtype=np.int64), np.asarray(cols_l, dtype=np.int64),
            np.asarray(flows_l, dtype=np.float64), pot_a[:n].copy(),
            int(pivots), bool(converged))


cdef inline bint _busy(cnp.int64_t[::1] ho, cnp.int64_t[::1] ht,
                       cnp.int64_t[::1] tok, Py_ssize_t t) noexcept nogil:
    return ho[t] >= 0 and tok[ho[t]] == ht[t]


cdef inline void _sift_down(double[::1] hp, cnp.int64_t[::1] ho, cnp.int64_t[::1] ht,
                            cnp.int64_t[::1] tok, Py_ssize_t base, Py_ssize_t size,
                            Py_ssize_t pos) noexcept nogil:
    # heap order on (price, busy): among equal prices free slots come first
    cdef Py_ssize_t child
    cdef double price = hp[base + pos]
    cdef cnp.int64_t owner = ho[base + pos]
    cdef cnp.int64_t token = ht[base + pos]
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        if child + 1 < size and (hp[base + child + 1] < hp[base + child] or (
                hp[base + child + 1] == hp[base + child]
                and not _busy(ho, ht, tok, base + child + 1))):
            child += 1
        if hp[base + child] > price or (hp[base + child] == price
                                        and _busy(ho, ht, tok, base + child)):
            break
        hp[base + pos] = hp[base + child]
        ho[base + pos] = ho[base + child]
        ht[base + pos] = ht[base + child]
        pos = child
    hp[base + pos] = price
    ho[base + pos] = owner
    ht[base + pos] = token


def auction_transport(const cnp.int64_t[::1] person_src,
                      const cnp.int64_t[::1] capacity,
                      const double[:, ::1] X, const double[:, ::1] Y,
                      const cnp.int64_t[:, ::1] cand, const double[:, ::1] cand_cost,
                      int norm, double p, double eps0, double theta,
                      double rel_tol, long long max_bids, bint exact_bids=True):
    """Forward auction with epsilon scaling for integer transport.

    Persons (unit supplies, ``person_src`` maps each to its source point)
    bid for slots of targets; target ``j`` owns ``capacity[j]`` slots held
    in a min-heap of prices. Bids scan the source's candidate targets and
    fall back to a full scan whenever a non-candidate could be competitive,
    so each bid is exact (``exact_bids=False`` restricts bids to candidates).
    After each epsilon reduction only persons violating the new
    complementary-slackness tolerance are released. Phases stop once epsilon drops below
    ``rel_tol`` times the current mean cost.

    Returns ``(assignment, slot_min_price, eps, n_bids, converged)``.
    """
    cdef Py_ssize_t M = person_src.shape[0], n2 = Y.shape[0], d = X.shape[1]
    cdef Py_ssize_t K = cand.shape[1]
    cdef Py_ssize_t j, t, r, i, j1, base, size, top, kk
    cdef double eps = eps0, b1, b2, val, c1, lb, lam_min, s2, price, total
    cdef long long bids = 0
    cdef int converged = 0

    offsets_a = np.zeros(n2 + 1, dtype=np.int64)
    np.cumsum(np.asarray(capacity), out=offsets_a[1:])
    cdef cnp.int64_t[::1] off = offsets_a
    cdef Py_ssize_t S = off[n2]
    heap_p_a = np.zeros(S, dtype=np.float64)
    heap_o_a = np.full(S, -1, dtype=np.int64)
    heap_t_a = np.full(S, -1, dtype=np.int64)
    assign_a = np.full(M, -1, dtype=np.int64)
    stack_a = np.empty(M, dtype=np.int64)
    paid_a = np.zeros(M, dtype=np.float64)
    tok_a = np.full(M, -1, dtype=np.int64)
    cdef double[::1] hp = heap_p_a
    cdef cnp.int64_t[::1] ho = heap_o_a
    cdef cnp.int64_t[::1] ht = heap_t_a
    cdef cnp.int64_t[::1] assign = assign_a
    cdef cnp.int64_t[::1] stack = stack_a
    cdef double[::1] paid = paid_a
    cdef cnp.int64_t[::1] tok = tok_a
    cdef Py_ssize_t sp, rr, t2
    cdef cnp.int64_t next_tok = 0
    cdef bint first = 1
    cdef double own

    with nogil:
        while True:
            lam_min = INFINITY
            for j in range(n2):
                if hp[off[j]] < lam_min:
                    lam_min = hp[off[j]]
            sp = 0
            if first:
                for r in range(M):
                    stack[r] = M - 1 - r
                sp = M
                first = 0
            else:
                # Slots of one target are interchangeable and others only
                # see the cheapest one, so lowering every slot to the target
                # minimum keeps all assigned persons eps-happy.
                for j in range(n2):
                    for t in range(off[j] + 1, off[j + 1]):
                        hp[t] = hp[off[j]]
                # keep persons that still satisfy eps-complementary slackness
                for rr in range(M):
                    r = M - 1 - rr
                    i = person_src[r]
                    own = _dist(X, i, Y, assign[r], d, norm, p) + hp[off[assign[r]]]
                    b1 = INFINITY
                    for kk in range(K):
                        val = cand_cost[i, kk] + hp[off[cand[i, kk]]]
                        if val < b1:
                            b1 = val
                    if exact_bids and K < n2 and own - eps > cand_cost[i, K - 1] + lam_min:
                        for j in range(n2):
                            val = _dist(X, i, Y, j, d, norm, p) + hp[off[j]]
                            if val < b1:
                                b1 = val
                    if own > b1 + eps:
                        assign[r] = -1
                        tok[r] = -1
                        stack[sp] = r
                        sp += 1
                # move released slots to the front of each (flat) heap
                for j in range(n2):
                    t2 = off[j]
                    for t in range(off[j], off[j + 1]):
                        if not _busy(ho, ht, tok, t):
                            ho[t], ho[t2] = ho[t2], ho[t]
                            ht[t], ht[t2] = ht[t2], ht[t]
                            t2 += 1
            while sp > 0:
                if bids >= max_bids:
                    break
                sp -= 1
                r = stack[sp]
                i = person_src[r]
                b1 = INFINITY
                b2 = INFINITY
                j1 = -1
                c1 = 0.0
                for kk in range(K):
                    j = cand[i, kk]
                    val = cand_cost[i, kk] + hp[off[j]]
                    if val < b1:
                        b2 = b1
                        b1 = val
                        j1 = j
                        c1 = cand_cost[i, kk]
                    elif val < b2:
                        b2 = val
                lb = cand_cost[i, K - 1] + lam_min
                if exact_bids and K < n2 and b2 > lb:
                    b1 = INFINITY
                    b2 = INFINITY
                    for j in range(n2):
                        val = _dist(X, i, Y, j, d, norm, p) + hp[off[j]]
                        if val < b1:
                            b2 = b1
                            b1 = val
                            j1 = j
                        elif val < b2:
                            b2 = val
                    c1 = _dist(X, i, Y, j1, d, norm, p)
                base = off[j1]
                size = off[j1 + 1] - base
                if size > 1:
                    s2 = hp[base + 1]
                    if size > 2 and hp[base + 2] < s2:
                        s2 = hp[base + 2]
                    if c1 + s2 < b2:
                        b2 = c1 + s2
                if b2 == INFINITY:
                    price = hp[base] + eps
                else:
                    price = b2 - c1 + eps
                top = ho[base]
                if top >= 0 and tok[top] != ht[base]:
                    top = -1  # slot was released at a phase start
                next_tok += 1
                hp[base] = price
                ho[base] = r
                ht[base] = next_tok
                _sift_down(hp, ho, ht, tok, base, size, 0)
                assign[r] = j1
                paid[r] = price
                tok[r] = next_tok
                if top >= 0:
                    assign[top] = -1
                    tok[top] = -1
                    stack[sp] = top
                    sp += 1
                bids += 1
                if (bids & 1023) == 0:
                    lam_min = INFINITY
                    for j in range(n2):
                        if hp[off[j]] < lam_min:
                            lam_min = hp[off[j]]
            if sp > 0:
                break
            total = 0.0
            for r in range(M):
                total += _dist(X, person_src[r], Y, assign[r], d, norm, p)
            if total <= 0.0 or eps <= rel_tol * total / M:
                converged = 1
                break
            eps = eps / theta
            if eps < rel_tol * total / M * 0.5:
                eps = rel_tol * total / M * 0.5

    lam_a = np.empty(n2, dtype=np.float64)
    for j in range(n2):
        lam_a[j] = heap_p_a[offsets_a[j]]
    return assign_a, lam_a, eps, int(bids), bool(converged)
