"""Pure-Python fallbacks for the hot loops in ``_kernels.pyx``.

Both modules expose the same functions with the same semantics; the
compiled one is picked at import time by :mod:`memext.kernels`.
"""

import numpy as np


def heatmap_max(n_chars, starts, ends, probs):
    """Per-character maximum of ``probs`` over intervals ``[starts[i], ends[i])``."""
    out = np.zeros(int(n_chars), dtype=np.float64)
    starts = np.asarray(starts, dtype=np.int64)
    ends = np.asarray(ends, dtype=np.int64)
    probs = np.asarray(probs, dtype=np.float64)
    for s, e, p in zip(starts.tolist(), ends.tolist(), probs.tolist()):
        s = max(s, 0)
        e = min(e, n_chars)
        if e > s:
            seg = out[s:e]
            np.maximum(seg, p, out=seg)
    return out


def _positions(b):
    b2j = {}
    for j, x in enumerate(b):
        b2j.setdefault(x, []).append(j)
    return b2j


def _longest(a, b2j, alo, ahi, blo, bhi):
    besti, bestj, bestsize = alo, blo, 0
    j2len = {}
    for i in range(alo, ahi):
        newj2len = {}
        for j in b2j.get(a[i], ()):
            if j < blo:
                continue
            if j >= bhi:
                break
            k = newj2len[j] = j2len.get(j - 1, 0) + 1
            if k > bestsize:
                besti, bestj, bestsize = i - k + 1, j - k + 1, k
        j2len = newj2len
    return besti, bestj, bestsize


def matching_blocks(a, b):
    """Ratcliff/Obershelp matching blocks of two integer sequences.

    Finds the longest common contiguous block (leftmost in ``a``, then
    leftmost in ``b``), then recurses on both sides.  Returns ``(i, j, size)``
    triples sorted by position, without a terminating sentinel.
    """
    a = list(np.asarray(a, dtype=np.int64).tolist())
    b = list(np.asarray(b, dtype=np.int64).tolist())
    b2j = _positions(b)
    queue = [(0, len(a), 0, len(b))]
    blocks = []
    while queue:
        alo, ahi, blo, bhi = queue.pop()
        i, j, k = _longest(a, b2j, alo, ahi, blo, bhi)
        if k:
            blocks.append((i, j, k))
            if alo < i and blo < j:
                queue.append((alo, i, blo, j))
            if i + k < ahi and j + k < bhi:
                queue.append((i + k, ahi, j + k, bhi))
    blocks.sort()
    return blocks
