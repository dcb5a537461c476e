"""Pure numpy implementations of the compiled kernels (same outputs)."""

import numpy as np


def lcp_array(rows):
    rows = np.ascontiguousarray(rows)
    n, m = rows.shape
    lcp = np.zeros(n, dtype=np.int64)
    if n < 2:
        return lcp, True
    neq = rows[1:] != rows[:-1]
    if m == 0:
        return np.zeros(n, dtype=np.int64), False
    first = np.where(neq.any(axis=1), neq.argmax(axis=1), m)
    lcp[1:] = first
    ok = True
    if np.any(first == m):
        ok = False
    else:
        idx = np.arange(n - 1)
        ok = bool(np.all(rows[1:][idx, first] > rows[:-1][idx, first]))
    return lcp, ok


def support_dp(lcp, m):
    lcp = np.asarray(lcp, dtype=np.int64)
    n = lcp.shape[0]
    sup = np.zeros((n, m), dtype=np.uint8)
    if n == 0 or m == 0:
        return sup, False
    starts = np.flatnonzero(lcp < m)
    flags = np.ones(starts.shape[0], dtype=bool)
    sup[starts, m - 1] = 1
    for d in range(m - 1, 0, -1):
        parents = np.flatnonzero(lcp < d)
        owner = np.searchsorted(parents, starts, side="right") - 1
        counts = np.bincount(owner, weights=flags, minlength=parents.shape[0])
        flags = counts >= 2
        sup[parents[flags], d - 1] = 1
        starts = parents
    return sup, bool(np.count_nonzero(flags) >= 2)


def markov_sample(cum_init, cum, u):
    u = np.asarray(u, dtype=np.float64)
    k = cum.shape[0]
    n = u.shape[0]
    if n == 0:
        return np.empty(0, dtype=np.int64)
    nxt = np.empty((n, k), dtype=np.int64)
    for s in range(k):
        nxt[:, s] = np.searchsorted(cum[s], u, side="right")
    np.minimum(nxt, k - 1, out=nxt)
    first = min(int(np.searchsorted(cum_init, u[0], side="right")), k - 1)
    table = nxt.tolist()
    out = [first] * n
    state = first
    for t in range(1, n):
        state = table[t][state]
        out[t] = state
    return np.asarray(out, dtype=np.int64)


def greedy_cover(rows, radius):
    rows = np.ascontiguousarray(rows)
    n = rows.shape[0]
    labels = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        if labels[i] >= 0:
            continue
        rest = np.flatnonzero(labels[i:] < 0) + i
        dist = np.count_nonzero(rows[rest] != rows[i], axis=1)
        labels[rest[dist <= radius]] = i
    return labels
