# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: per-character heatmap maxima and gestalt matching blocks."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def heatmap_max(Py_ssize_t n_chars, starts, ends, probs):
    cdef cnp.int64_t[::1] s = np.ascontiguousarray(starts, dtype=np.int64)
    cdef cnp.int64_t[::1] e = np.ascontiguousarray(ends, dtype=np.int64)
    cdef double[::1] p = np.ascontiguousarray(probs, dtype=np.float64)
    out_arr = np.zeros(n_chars, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, c, lo, hi
    cdef double v
    for i in range(s.shape[0]):
        lo = s[i] if s[i] > 0 else 0
        hi = e[i] if e[i] < n_chars else n_chars
        v = p[i]
        for c in range(lo, hi):
            if v > out[c]:
                out[c] = v
    return out_arr


cdef struct _Match:
    Py_ssize_t i
    Py_ssize_t j
    Py_ssize_t k


cdef _Match _longest(const cnp.int64_t[::1] a, const cnp.int64_t[::1] indptr,
                     const cnp.int64_t[::1] pos, cnp.int64_t[::1] prev,
                     cnp.int64_t[::1] cur, cnp.int64_t[::1] prev_touched,
                     cnp.int64_t[::1] cur_touched,
                     Py_ssize_t alo, Py_ssize_t ahi, Py_ssize_t blo, Py_ssize_t bhi) nogil:
    # prev[j + 1] holds the length of the match ending at (i - 1, j)
    cdef _Match best
    best.i = alo
    best.j = blo
    best.k = 0
    cdef Py_ssize_t i, p, j, k, t
    cdef Py_ssize_t n_prev = 0, n_cur = 0
    cdef cnp.int64_t x
    for i in range(alo, ahi):
        x = a[i]
        n_cur = 0
        if x >= 0:
            for p in range(indptr[x], indptr[x + 1]):
                j = pos[p]
                if j < blo:
                    continue
                if j >= bhi:
                    break
                k = prev[j] + 1
                cur[j + 1] = k
                cur_touched[n_cur] = j + 1
                n_cur += 1
                if k > best.k:
                    best.i = i - k + 1
                    best.j = j - k + 1
                    best.k = k
        for t in range(n_prev):
            prev[prev_touched[t]] = 0
        # swap roles: cur becomes prev for the next row
        for t in range(n_cur):
            prev[cur_touched[t]] = cur[cur_touched[t]]
            cur[cur_touched[t]] = 0
            prev_touched[t] = cur_touched[t]
        n_prev = n_cur
    for t in range(n_prev):
        prev[prev_touched[t]] = 0
    return best


def matching_blocks(a_in, b_in):
    a_arr = np.ascontiguousarray(a_in, dtype=np.int64)
    b_arr = np.ascontiguousarray(b_in, dtype=np.int64)
    cdef Py_ssize_t la = a_arr.shape[0], lb = b_arr.shape[0]
    if la == 0 or lb == 0:
        return []
    # remap symbols to dense ids present in b; symbols absent from b get -1
    uniq, b_ids = np.unique(b_arr, return_inverse=True)
    b_ids = b_ids.astype(np.int64)
    loc = np.searchsorted(uniq, a_arr)
    loc_c = np.minimum(loc, uniq.shape[0] - 1)
    a_ids = np.where(uniq[loc_c] == a_arr, loc_c, -1).astype(np.int64)
    order = np.argsort(b_ids, kind="stable").astype(np.int64)
    counts = np.bincount(b_ids, minlength=uniq.shape[0])
    indptr_arr = np.zeros(uniq.shape[0] + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr_arr[1:])

    cdef const cnp.int64_t[::1] a = a_ids
    cdef const cnp.int64_t[::1] indptr = indptr_arr
    cdef const cnp.int64_t[::1] pos = order
    cdef cnp.int64_t[::1] prev = np.zeros(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cur = np.zeros(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] prev_touched = np.zeros(lb + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] cur_touched = np.zeros(lb + 1, dtype=np.int64)

    cdef _Match m
    cdef Py_ssize_t alo, ahi, blo, bhi
    queue = [(0, la, 0, lb)]
    blocks = []
    while queue:
        alo, ahi, blo, bhi = queue.pop()
        m = _longest(a, indptr, pos, prev, cur, prev_touched, cur_touched, alo, ahi, blo, bhi)
        if m.k:
            blocks.append((m.i, m.j, m.k))
            if alo < m.i and blo < m.j:
                queue.append((alo, m.i, blo, m.j))
            if m.i + m.k < ahi and m.j + m.k < bhi:
                queue.append((m.i + m.k, ahi, m.j + m.k, bhi))
    blocks.sort()
    return blocks
