"""Pure-Python versions of the hot loops.

Mirrors ``_ckernels.pyx`` call for call; used when the extension is not
built or when ``UDTRANSFER_PURE_PYTHON=1`` is set.
"""

import numpy as np

NEG_INF = float("-inf")


def wordpiece(word, entries, unk_token, prefix="##", max_chars=200):
    if len(word) > max_chars:
        return [unk_token]
    pieces = []
    start = 0
    n = len(word)
    while start < n:
        end = n
        found = None
        while end > start:
            piece = word[start:end]
            if start > 0:
                piece = prefix + piece
            if piece in entries:
                found = piece
                break
            end -= 1
        if found is None:
            return [unk_token]
        pieces.append(found)
        start = end
    return pieces


def _best_heads(scores, size):
    heads = [-1] * size
    for d in range(1, size):
        arg = 0
        best = scores[0][d]
        for h in range(1, size):
            if h != d and scores[h][d] > best:
                best = scores[h][d]
                arg = h
        heads[d] = arg
    return heads


def _find_cycle(heads, size):
    seen = [0] * size
    seen[0] = 2
    for start in range(1, size):
        path = []
        v = start
        while seen[v] == 0:
            seen[v] = 1
            path.append(v)
            v = heads[v]
            if v < 0:
                break
        if v >= 0 and seen[v] == 1:
            return path[path.index(v):]
        for u in path:
            seen[u] = 2
    return None


def _cle(scores):
    size = len(scores)
    heads = _best_heads(scores, size)
    cycle = _find_cycle(heads, size)
    if cycle is None:
        return heads
    in_cycle = [False] * size
    for v in cycle:
        in_cycle[v] = True
    outside = [v for v in range(size) if not in_cycle[v]]
    m = len(outside)
    c = m  # index of the contracted node
    new = [[NEG_INF] * (m + 1) for _ in range(m + 1)]
    enter = [-1] * (m + 1)  # cycle node entered from outside node
    leave = [-1] * (m + 1)  # cycle node leaving towards outside node
    cycle = sorted(cycle)
    for a, u in enumerate(outside):
        row = scores[u]
        for b, w in enumerate(outside):
            if a != b:
                new[a][b] = row[w]
        enter[a] = cycle[0]
        best = row[cycle[0]] - scores[heads[cycle[0]]][cycle[0]]
        for v in cycle[1:]:
            s = row[v] - scores[heads[v]][v]
            if s > best:
                best = s
                enter[a] = v
        new[a][c] = best
    for b, w in enumerate(outside):
        leave[b] = cycle[0]
        best = scores[cycle[0]][w]
        for v in cycle[1:]:
            s = scores[v][w]
            if s > best:
                best = s
                leave[b] = v
        new[c][b] = best
    sub = _cle(new)
    result = list(heads)
    for b, w in enumerate(outside):
        if b == 0:
            continue
        h = sub[b]
        result[w] = leave[b] if h == c else outside[h]
    u = outside[sub[c]]
    result[enter[sub[c]]] = u
    return result


def mst(scores):
    """Maximum spanning arborescence rooted at node 0 by Chu-Liu-Edmonds.

    ``scores[h, d]`` is the weight of arc h -> d; ``-inf`` marks a missing
    arc.  Returns a head array with ``heads[0] == -1``.
    """
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
        raise ValueError(f"expected a non-empty square score table, got shape {arr.shape}")
    s = arr.tolist()
    size = len(s)
    for v in range(size):
        s[v][v] = NEG_INF
        s[v][0] = NEG_INF
    return np.asarray(_cle(s), dtype=np.int64)
