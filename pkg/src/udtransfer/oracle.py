"""Exhaustive enumeration of dependency trees for small sentences.

Used to check the determinant-based partition function, the marginals and
the decoder.  Cost grows like (n+1)^(n-1), so ``n`` is capped.
"""

from __future__ import annotations

import math
from typing import Iterator

import numpy as np

MAX_ENUMERATION_N = 8


def enumerate_trees(n: int, single_root: bool = True) -> Iterator[tuple[int, ...]]:
    """Yield every valid head assignment ``(h_1, ..., h_n)`` rooted at 0.

    Heads are assigned left to right; an assignment is pruned as soon as the
    new arc closes a cycle among already assigned words.
    """
    if n < 1:
        return
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"enumeration is limited to n <= {MAX_ENUMERATION_N}, got {n}")
    heads = [-1] * (n + 1)

    def closes_cycle(c: int, h: int) -> bool:
        v = h
        while v != 0 and heads[v] != -1:
            if v == c:
                return True
            v = heads[v]
        return v == c

    def rec(c: int, roots: int):
        if c > n:
            yield tuple(heads[1:])
            return
        for h in range(n + 1):
            if h == c:
                continue
            if h == 0:
                if single_root and roots >= 1:
                    continue
            elif closes_cycle(c, h):
                continue
            heads[c] = h
            yield from rec(c + 1, roots + (h == 0))
            heads[c] = -1

    yield from rec(1, 0)


def tree_score(scores: np.ndarray, heads) -> float:
    """Sum of ``scores[h, c-1]`` over the arcs of a tree, in word order."""
    total = 0.0
    for c, h in enumerate(heads):
        total += float(scores[h, c])
    return total


def brute_force_log_partition(scores: np.ndarray, single_root: bool = True) -> float:
    n = scores.shape[1]
    values = [tree_score(scores, t) for t in enumerate_trees(n, single_root)]
    top = max(values)
    return top + math.log(math.fsum(math.exp(v - top) for v in values))


def brute_force_marginals(scores: np.ndarray, single_root: bool = True) -> np.ndarray:
    n = scores.shape[1]
    trees = list(enumerate_trees(n, single_root))
    log_z = brute_force_log_partition(scores, single_root)
    mu = np.zeros((n + 1, n))
    for t in trees:
        p = math.exp(tree_score(scores, t) - log_z)
        for c, h in enumerate(t):
            mu[h, c] += p
    return mu


def count_trees(n: int, single_root: bool = True) -> int:
    return sum(1 for _ in enumerate_trees(n, single_root))
