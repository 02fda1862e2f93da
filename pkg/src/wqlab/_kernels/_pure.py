"""Pure-Python/numpy fallback for the compiled kernels in ``_core.pyx``.

Same algorithms, same signatures. Pricing and cost evaluation are
vectorized with numpy; tree updates and bidding run as Python loops, so
this backend is only practical for small instances.
"""
from __future__ import annotations

import math

import numpy as np

L1, L2, LINF = 0, 1, 2


def _dist_rows(X: np.ndarray, Y: np.ndarray, norm: int, p: float) -> np.ndarray:
    diff = X - Y
    if norm == LINF:
        r = np.abs(diff).max(axis=-1)
    elif norm == L1:
        r = np.abs(diff).sum(axis=-1)
    else:
        sq = (diff * diff).sum(axis=-1)
        if p == 2.0:
            return sq
        r = np.sqrt(sq)
    if p == 1.0:
        return r
    if p == 2.0:
        return r * r
    return r**p


def pair_costs(X, Y, rows, cols, norm, p):
    X = np.asarray(X)
    Y = np.asarray(Y)
    return _dist_rows(X[np.asarray(rows)], Y[np.asarray(cols)], norm, p)


def c_transform(X, Y, price, norm, p):
    X = np.asarray(X)
    Y = np.asarray(Y)
    price = np.asarray(price)
    out = np.empty(X.shape[0])
    chunk = max(1, 2_000_000 // max(1, Y.shape[0]))
    for s in range(0, X.shape[0], chunk):
        c = _dist_rows(X[s:s + chunk, None, :], Y[None, :, :], norm, p)
        out[s:s + chunk] = (c + price[None, :]).min(axis=1)
    return out


def network_simplex(supply_src, demand_tgt, X, Y, norm, p, cost_scale, max_pivots):
    X = np.asarray(X)
    Y = np.asarray(Y)
    n1, n2 = X.shape[0], Y.shape[0]
    n = n1 + n2
    root = n
    E = n1 * n2
    art = 2.0 * cost_scale if cost_scale > 0 else 1.0
    tol = 1e-13 * (cost_scale if cost_scale > 0 else 1.0)

    parent = [root] * n + [-1]
    pred = [E + u for u in range(n)] + [-1]
    up = [False] * (n + 1)
    flow = [0.0] * (n + 1)
    pot = [0.0] * (n + 1)
    depth = [1] * n + [0]
    first = [-1] * (n + 1)
    nxt = [-1] * (n + 1)
    prv = [-1] * (n + 1)
    for u in range(n):
        s = float(supply_src[u]) if u < n1 else -float(demand_tgt[u - n1])
        if s >= 0:
            up[u], flow[u], pot[u] = True, s, -art
        else:
            up[u], flow[u], pot[u] = False, -s, art
        nxt[u] = first[root]
        if first[root] != -1:
            prv[first[root]] = u
        first[root] = u

    block = max(16, int(math.sqrt(E)))
    start = 0
    pivots = 0
    converged = False
    while pivots < max_pivots:
        best = -1
        scanned = 0
        pot_arr = np.asarray(pot)
        while scanned < E:
            m = min(block, E - scanned)
            e = (start + np.arange(m)) % E
            i = e // n2
            j = e - i * n2
            rc = _dist_rows(X[i], Y[j], norm, p) + pot_arr[i] - pot_arr[n1 + j]
            k = int(np.argmin(rc))
            start = (start + m) % E
            scanned += m
            if rc[k] < -tol:
                best = int(e[k])
                break
        if best < 0:
            converged = True
            break
        pivots += 1

        u = best // n2
        v = n1 + best % n2
        c = float(_dist_rows(X[u], Y[v - n1], norm, p))
        rc_e = c + pot[u] - pot[v]

        x, y = u, v
        while depth[x] > depth[y]:
            x = parent[x]
        while depth[y] > depth[x]:
            y = parent[y]
        while x != y:
            x, y = parent[x], parent[y]
        join = x

        delta = math.inf
        q = -1
        on_u = False
        x = u
        while x != join:
            if up[x] and flow[x] < delta:
                delta, q, on_u = flow[x], x, True
            x = parent[x]
        x = v
        while x != join:
            if not up[x] and flow[x] <= delta:
                delta, q, on_u = flow[x], x, False
            x = parent[x]

        x = u
        while x != join:
            flow[x] += -delta if up[x] else delta
            x = parent[x]
        x = v
        while x != join:
            flow[x] += delta if up[x] else -delta
            x = parent[x]

        if on_u:
            s_in, s_out, new_up, shift = u, v, True, -rc_e
        else:
            s_in, s_out, new_up, shift = v, u, False, rc_e

        prev_node, new_arc, new_flow = s_out, best, delta
        x = s_in
        while True:
            old_parent, old_arc, old_up, old_flow = parent[x], pred[x], up[x], flow[x]
            if prv[x] != -1:
                nxt[prv[x]] = nxt[x]
            else:
                first[old_parent] = nxt[x]
            if nxt[x] != -1:
                prv[nxt[x]] = prv[x]
            parent[x], pred[x], up[x], flow[x] = prev_node, new_arc, new_up, new_flow
            nxt[x] = first[prev_node]
            prv[x] = -1
            if first[prev_node] != -1:
                prv[first[prev_node]] = x
            first[prev_node] = x
            if x == q:
                break
            new_arc, new_up, new_flow = old_arc, not old_up, old_flow
            prev_node = x
            x = old_parent

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

    rows, cols, flows = [], [], []
    for x in range(n):
        e = pred[x]
        if e < E and flow[x] > 0:
            rows.append(e // n2)
            cols.append(e % n2)
            flows.append(flow[x])
    return (np.asarray(rows, dtype=np.int64), np.asarray(cols, dtype=np.int64),
            np.asarray(flows, dtype=np.float64), np.asarray(pot[:n]), pivots, converged)


def _sift_down(hp, ho, ht, tok, base, size, pos):
    # heap order on (price, busy): among equal prices free slots come first
    def busy(t):
        return ho[t] >= 0 and tok[ho[t]] == ht[t]

    price, owner, token = hp[base + pos], ho[base + pos], ht[base + pos]
    while True:
        child = 2 * pos + 1
        if child >= size:
            break
        a, b = base + child, base + child + 1
        if child + 1 < size and (hp[b] < hp[a] or (hp[b] == hp[a] and not busy(b))):
            child += 1
        c = base + child
        if hp[c] > price or (hp[c] == price and busy(c)):
            break
        hp[base + pos], ho[base + pos], ht[base + pos] = hp[c], ho[c], ht[c]
        pos = child
    hp[base + pos], ho[base + pos], ht[base + pos] = price, owner, token


def auction_transport(person_src, capacity, X, Y, cand, cand_cost, norm, p,
                      eps0, theta, rel_tol, max_bids, exact_bids=True):
    X = np.asarray(X)
    Y = np.asarray(Y)
    M = len(person_src)
    n2 = Y.shape[0]
    K = np.asarray(cand).shape[1]
    src = np.asarray(person_src).tolist()
    cand_l = np.asarray(cand).tolist()
    cost_l = np.asarray(cand_cost).tolist()
    off = [0] + np.cumsum(np.asarray(capacity)).tolist()
    S = off[-1]
    hp = [0.0] * S
    ho = [-1] * S
    ht = [-1] * S
    assign = [-1] * M
    tok = [-1] * M
    next_tok = 0
    eps = float(eps0)
    bids = 0
    converged = False
    first = True

    def full_row(i):
        return _dist_rows(X[i][None, :], Y, norm, p) + np.asarray([hp[off[j]] for j in range(n2)])

    while True:
        lam_min = min(hp[off[j]] for j in range(n2))
        if first:
            stack = list(range(M - 1, -1, -1))
            first = False
        else:
            for j in range(n2):
                for t in range(off[j] + 1, off[j + 1]):
                    hp[t] = hp[off[j]]
            stack = []
            for r in range(M - 1, -1, -1):
                i = src[r]
                own = float(_dist_rows(X[i], Y[assign[r]], norm, p)) + hp[off[assign[r]]]
                b1 = min(c + hp[off[j]] for j, c in zip(cand_l[i], cost_l[i]))
                if exact_bids and K < n2 and own - eps > cost_l[i][K - 1] + lam_min:
                    b1 = min(b1, float(full_row(i).min()))
                if own > b1 + eps:
                    assign[r] = -1
                    tok[r] = -1
                    stack.append(r)
            for j in range(n2):
                t2 = off[j]
                for t in range(off[j], off[j + 1]):
                    if not (ho[t] >= 0 and tok[ho[t]] == ht[t]):
                        ho[t], ho[t2] = ho[t2], ho[t]
                        ht[t], ht[t2] = ht[t2], ht[t]
                        t2 += 1
        while stack:
            if bids >= max_bids:
                break
            r = stack.pop()
            i = src[r]
            b1 = b2 = math.inf
            j1 = -1
            c1 = 0.0
            for j, cij in zip(cand_l[i], cost_l[i]):
                val = cij + hp[off[j]]
                if val < b1:
                    b2, b1, j1, c1 = b1, val, j, cij
                elif val < b2:
                    b2 = val
            if exact_bids and K < n2 and b2 > cost_l[i][K - 1] + lam_min:
                vals = full_row(i)
                b1 = b2 = math.inf
                for j, val in enumerate(vals.tolist()):
                    if val < b1:
                        b2, b1, j1 = b1, val, j
                    elif val < b2:
                        b2 = val
                c1 = float(_dist_rows(X[i], Y[j1], norm, p))
            base = off[j1]
            size = off[j1 + 1] - base
            if size > 1:
                s2 = hp[base + 1]
                if size > 2 and hp[base + 2] < s2:
                    s2 = hp[base + 2]
                b2 = min(b2, c1 + s2)
            price = hp[base] + eps if b2 == math.inf else b2 - c1 + eps
            top = ho[base]
            if top >= 0 and tok[top] != ht[base]:
                top = -1
            next_tok += 1
            hp[base], ho[base], ht[base] = price, r, next_tok
            _sift_down(hp, ho, ht, tok, base, size, 0)
            assign[r] = j1
            tok[r] = next_tok
            if top >= 0:
                assign[top] = -1
                tok[top] = -1
                stack.append(top)
            bids += 1
            if bids % 1024 == 0:
                lam_min = min(hp[off[j]] for j in range(n2))
        if stack:
            break
        assign_a = np.asarray(assign, dtype=np.int64)
        total = float(_dist_rows(X[np.asarray(src)], Y[assign_a], norm, p).sum())
        if total <= 0.0 or eps <= rel_tol * total / M:
            converged = True
            break
        eps = max(eps / theta, rel_tol * total / M * 0.5)
    lam = np.array([hp[off[j]] for j in range(n2)])
    return np.asarray(assign, dtype=np.int64), lam, eps, bids, converged
