# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops.

Every function here has a numpy twin in ``_kernels_py`` with identical
outputs; ``recurlab.kernels`` picks one at import time.
"""

import numpy as np
cimport numpy as cnp
from libc.stdint cimport int64_t, uint8_t, uint16_t, uint32_t

cnp.import_array()

ctypedef fused symbol_t:
    uint8_t
    uint16_t
    uint32_t
    int64_t


def lcp_array(const symbol_t[:, ::1] rows):
    """Longest common prefix of each row with its predecessor.

    Returns ``(lcp, ok)`` where ``ok`` is False when the rows are not
    strictly increasing in lexicographic order.
    """
    cdef Py_ssize_t n = rows.shape[0], m = rows.shape[1], i, d
    lcp_np = np.zeros(n, dtype=np.int64)
    cdef int64_t[::1] lcp = lcp_np
    cdef bint ok = True
    for i in range(1, n):
        d = 0
        while d < m and rows[i, d] == rows[i - 1, d]:
            d += 1
        lcp[i] = d
        if d == m or rows[i, d] < rows[i - 1, d]:
            ok = False
    return lcp_np, ok


def support_dp(const int64_t[::1] lcp, Py_ssize_t m):
    """Bottom-up supportability over the trie implied by sorted rows.

    ``sup[i, d-1]`` is set when row ``i`` opens a depth-``d`` node that
    roots a complete binary subtree with leaves in the language.
    """
    cdef Py_ssize_t n = lcp.shape[0], i, d, l
    sup_np = np.zeros((n, m), dtype=np.uint8)
    cdef uint8_t[:, ::1] sup = sup_np
    count_np = np.zeros(m + 1, dtype=np.int64)
    start_np = np.zeros(m + 1, dtype=np.int64)
    cdef int64_t[::1] count = count_np
    cdef int64_t[::1] start = start_np
    cdef bint ok
    if n == 0 or m == 0:
        return sup_np, False
    for i in range(n):
        if i == 0:
            l = 0
        else:
            l = lcp[i]
            d = m
            while d > l:
                if d == m:
                    ok = True
                else:
                    ok = count[d] >= 2
                    count[d] = 0
                if ok:
                    sup[start[d], d - 1] = 1
                    count[d - 1] += 1
                d -= 1
        for d in range(l + 1, m + 1):
            start[d] = i
    d = m
    while d > 0:
        if d == m:
            ok = True
        else:
            ok = count[d] >= 2
        if ok:
            sup[start[d], d - 1] = 1
            count[d - 1] += 1
        d -= 1
    return sup_np, count[0] >= 2


def markov_sample(const double[::1] cum_init, const double[:, ::1] cum, const double[::1] u):
    """Inverse-CDF sampling of a finite chain from pre-drawn uniforms."""
    cdef Py_ssize_t n = u.shape[0], k = cum.shape[0], t, s, lo, hi, mid
    out_np = np.empty(n, dtype=np.int64)
    cdef int64_t[::1] out = out_np
    if n == 0:
        return out_np
    lo = 0
    hi = k
    while lo < hi:
        mid = (lo + hi) // 2
        if cum_init[mid] <= u[0]:
            lo = mid + 1
        else:
            hi = mid
    out[0] = lo if lo < k else k - 1
    for t in range(1, n):
        s = out[t - 1]
        lo = 0
        hi = k
        while lo < hi:
            mid = (lo + hi) // 2
            if cum[s, mid] <= u[t]:
                lo = mid + 1
            else:
                hi = mid
        out[t] = lo if lo < k else k - 1
    return out_np


def greedy_cover(const symbol_t[:, ::1] rows, Py_ssize_t radius):
    """Assign each row (in priority order) to the first uncovered center."""
    cdef Py_ssize_t n = rows.shape[0], length = rows.shape[1], i, j, d, dist
    labels_np = np.full(n, -1, dtype=np.int64)
    cdef int64_t[::1] labels = labels_np
    for i in range(n):
        if labels[i] >= 0:
            continue
        labels[i] = i
        for j in range(i + 1, n):
            if labels[j] >= 0:
                continue
            dist = 0
            for d in range(length):
                if rows[i, d] != rows[j, d]:
                    dist += 1
                    if dist > radius:
                        break
            if dist <= radius:
                labels[j] = i
    return labels_np
