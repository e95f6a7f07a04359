# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the hot loops; see ``_pykernels`` for the reference."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double NEG_INF = float("-inf")


def wordpiece(str word, entries, str unk_token, str prefix="##", Py_ssize_t max_chars=200):
    cdef Py_ssize_t n = len(word)
    cdef Py_ssize_t start = 0, end
    cdef str piece
    cdef list pieces = []
    if n > max_chars:
        return [unk_token]
    while start < n:
        end = n
        piece = None
        while end > start:
            if start > 0:
                piece = prefix + word[start:end]
            else:
                piece = word[start:end]
            if piece in entries:
                break
            piece = None
            end -= 1
        if piece is None:
            return [unk_token]
        pieces.append(piece)
        start = end
    return pieces


cdef Py_ssize_t _find_cycle(cnp.int64_t[:] heads, Py_ssize_t size, cnp.int8_t[:] in_cycle):
    """Marks one cycle in ``in_cycle`` and returns its length (0 if none)."""
    cdef cnp.int8_t[:] seen = np.zeros(size, dtype=np.int8)
    cdef cnp.int64_t[:] path = np.zeros(size, dtype=np.int64)
    cdef Py_ssize_t start, v, k, plen, length
    seen[0] = 2
    for start in range(1, size):
        plen = 0
        v = start
        while seen[v] == 0:
            seen[v] = 1
            path[plen] = v
            plen += 1
            v = heads[v]
        if seen[v] == 1:
            length = 0
            for k in range(plen - 1, -1, -1):
                in_cycle[path[k]] = 1
                length += 1
                if path[k] == v:
                    break
            return length
        for k in range(plen):
            seen[path[k]] = 2
    return 0


cdef cnp.int64_t[:] _cle(double[:, :] s):
    cdef Py_ssize_t size = s.shape[0]
    cdef Py_ssize_t d, h, a, b, u, w, v, k, m, c
    cdef double best, val
    cdef cnp.int64_t[:] heads = np.full(size, -1, dtype=np.int64)
    for d in range(1, size):
        heads[d] = 0
        best = s[0, d]
        for h in range(1, size):
            if h != d and s[h, d] > best:
                best = s[h, d]
                heads[d] = h

    cdef cnp.int8_t[:] in_cycle = np.zeros(size, dtype=np.int8)
    cdef Py_ssize_t clen = _find_cycle(heads, size, in_cycle)
    if clen == 0:
        return heads

    m = size - clen
    c = m
    cdef cnp.int64_t[:] outside = np.empty(m, dtype=np.int64)
    cdef cnp.int64_t[:] cyc = np.empty(clen, dtype=np.int64)
    a = 0
    k = 0
    for v in range(size):
        if in_cycle[v]:
            cyc[k] = v
            k += 1
        else:
            outside[a] = v
            a += 1

    cdef double[:, :] new = np.full((m + 1, m + 1), NEG_INF)
    cdef cnp.int64_t[:] enter = np.full(m + 1, -1, dtype=np.int64)
    cdef cnp.int64_t[:] leave = np.full(m + 1, -1, dtype=np.int64)
    for a in range(m):
        u = outside[a]
        for b in range(m):
            if a != b:
                new[a, b] = s[u, outside[b]]
        v = cyc[0]
        enter[a] = v
        best = s[u, v] - s[heads[v], v]
        for k in range(1, clen):
            v = cyc[k]
            val = s[u, v] - s[heads[v], v]
            if val > best:
                best = val
                enter[a] = v
        new[a, c] = best
    for b in range(m):
        w = outside[b]
        v = cyc[0]
        leave[b] = v
        best = s[v, w]
        for k in range(1, clen):
            v = cyc[k]
            if s[v, w] > best:
                best = s[v, w]
                leave[b] = v
        new[c, b] = best

    cdef cnp.int64_t[:] sub = _cle(new)
    cdef cnp.int64_t[:] result = heads.copy()
    for b in range(1, m):
        h = sub[b]
        if h == c:
            result[outside[b]] = leave[b]
        else:
            result[outside[b]] = outside[h]
    result[enter[sub[c]]] = outside[sub[c]]
    return result


def mst(scores):
    """Maximum spanning arborescence rooted at node 0 by Chu-Liu-Edmonds."""
    arr = np.array(scores, dtype=np.float64, copy=True)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"expected a non-empty square score table, got shape {arr.shape}")
    cdef double[:, :] s = arr
    cdef Py_ssize_t size = s.shape[0], v
    for v in range(size):
        s[v, v] = NEG_INF
        s[v, 0] = NEG_INF
    return np.asarray(_cle(s), dtype=np.int64)
