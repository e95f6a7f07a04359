"""Exact non-projective decoding and label assignment."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .oracle import MAX_ENUMERATION_N, enumerate_trees, tree_score


def _square(scores: np.ndarray) -> np.ndarray:
    """(n+1) x (n+1) arc table with an empty column for ROOT."""
    n = scores.shape[1]
    full = np.full((n + 1, n + 1), -np.inf)
    full[:, 1:] = scores
    return full


def mst_decode(scores: np.ndarray, single_root: bool = True, mst=None) -> list[int]:
    """Maximum spanning arborescence over an (n+1) x n score matrix.

    With ``single_root`` the unconstrained optimum is kept when it already has
    one ROOT child; otherwise every word is tried as the only ROOT child and
    the best resulting tree wins (ties go to the lower word index).
    """
    mst = mst or kernels.mst
    S = np.asarray(scores, dtype=np.float64)
    n = S.shape[1]
    if S.shape[0] != n + 1 or n < 1:
        raise ValueError(f"expected an (n+1) x n score matrix with n >= 1, got {S.shape}")
    full = _square(S)
    heads = mst(full)[1:].tolist()
    if not single_root or sum(1 for h in heads if h == 0) == 1:
        return heads
    best, best_score = None, -np.inf
    for r in range(1, n + 1):
        if not np.isfinite(full[0, r]):
            continue
        forced = full.copy()
        forced[0, :] = -np.inf
        forced[0, r] = full[0, r]
        cand = mst(forced)[1:].tolist()
        value = tree_score(S, cand)
        if value > best_score:
            best, best_score = cand, value
    if best is None:
        raise ValueError("no finite ROOT arc available")
    return best


def assign_labels(label_scores: np.ndarray, heads: Sequence[int]) -> list[int]:
    """Label index per dependent: argmax at the chosen head, lowest index on ties."""
    T = np.asarray(label_scores)
    cols = np.arange(len(heads))
    return np.argmax(T[np.asarray(heads), cols, :], axis=1).tolist()


def brute_force_best_tree(scores: np.ndarray, single_root: bool = True) -> list[int]:
    """Exhaustive maximum over all valid trees (n <= 8)."""
    S = np.asarray(scores, dtype=np.float64)
    n = S.shape[1]
    if n > MAX_ENUMERATION_N:
        raise ValueError(f"brute force is limited to n <= {MAX_ENUMERATION_N}, got {n}")
    best, best_score = None, -np.inf
    for t in enumerate_trees(n, single_root):
        value = tree_score(S, t)
        if best is None or value > best_score:
            best, best_score = list(t), value
    return best


def decode_score(scores: np.ndarray, heads: Sequence[int]) -> float:
    return tree_score(np.asarray(scores, dtype=np.float64), heads)
