"""Globally normalized arc objective via Kirchhoff's Matrix-Tree Theorem.

Scores are first locally normalized (column-wise log-softmax over heads);
the log-partition over all non-projective trees is the log-determinant of
a Laplacian built from the exponentiated normalized scores.  Marginals come
from the inverse of that Laplacian.
"""

from __future__ import annotations

import warnings
from typing import Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.special import log_softmax

from . import scorer
from .scorer import BiaffineParams
from .treebank import tree_violations

PIVOT_TOLERANCE = 1e-300


class DegenerateWeightsError(ArithmeticError):
    """The Laplacian is singular to working precision."""


def local_normalize(scores: np.ndarray) -> np.ndarray:
    """Column-wise log-softmax over candidate heads; ``-inf`` cells stay ``-inf``."""
    S = np.asarray(scores, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1] + 1:
        raise ValueError(f"expected an (n+1) x n score matrix, got shape {S.shape}")
    if not np.isfinite(S).any(axis=0).all():
        bad = int(np.flatnonzero(~np.isfinite(S).any(axis=0))[0]) + 1
        raise ValueError(f"dependent {bad} has no finite head score")
    with np.errstate(invalid="ignore"):
        return log_softmax(S, axis=0)


def _scaled_weights(logp: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    shift = logp.max(axis=0)
    return np.exp(logp - shift), shift


def laplacian(weights: np.ndarray, single_root: bool) -> np.ndarray:
    """n x n Laplacian over words from (n+1) x n arc weights (row 0 = ROOT).

    Multi-root: diagonal sums all incoming weights including ROOT.  Single
    root: diagonal excludes ROOT and the first row is replaced by the ROOT
    weights.
    """
    n = weights.shape[1]
    word = weights[1:, :].copy()
    np.fill_diagonal(word, 0.0)
    lap = -word
    incoming = word.sum(axis=0)
    if single_root:
        lap[np.diag_indices(n)] = incoming
        lap[0, :] = weights[0, :]
    else:
        lap[np.diag_indices(n)] = incoming + weights[0, :]
    return lap


def _factor(lap: np.ndarray):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LinAlgWarning)
        lu, piv = lu_factor(lap, check_finite=False)
    diag = np.diag(lu)
    if np.min(np.abs(diag)) < PIVOT_TOLERANCE:
        raise DegenerateWeightsError("singular Laplacian: arc weights are degenerate")
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    sign = (-1) ** swaps * np.prod(np.sign(diag))
    if sign <= 0:
        raise DegenerateWeightsError("Laplacian determinant is not positive")
    return lu, piv, float(np.sum(np.log(np.abs(diag))))


def log_partition(logp: np.ndarray, single_root: bool = True) -> float:
    """log Z: log-sum over all dependency trees of exp(sum of arc scores)."""
    logp = np.asarray(logp, dtype=np.float64)
    weights, shift = _scaled_weights(logp)
    _, _, logdet = _factor(laplacian(weights, single_root))
    return logdet + float(shift.sum())


def arc_marginals(logp: np.ndarray, single_root: bool = True) -> np.ndarray:
    """(n+1) x n matrix of arc probabilities, the gradient of log Z."""
    logp = np.asarray(logp, dtype=np.float64)
    n = logp.shape[1]
    weights, _ = _scaled_weights(logp)
    lu, piv, _ = _factor(laplacian(weights, single_root))
    inv = lu_solve((lu, piv), np.eye(n), check_finite=False)
    diag = np.diag(inv)
    mu = np.zeros((n + 1, n))
    # word -> word arcs: h (0-based word index) heads c
    word = weights[1:, :]
    if single_root:
        keep_diag = np.ones(n)
        keep_diag[0] = 0.0
        keep_off = np.ones(n)
        keep_off[0] = 0.0
        mu[1:, :] = word * (keep_diag[None, :] * diag[None, :] - keep_off[:, None] * inv.T)
        mu[0, :] = weights[0, :] * inv[:, 0]
    else:
        mu[1:, :] = word * (diag[None, :] - inv.T)
        mu[0, :] = weights[0, :] * diag
    idx = np.arange(n)
    mu[idx + 1, idx] = 0.0
    return mu


def tree_log_prob(logp: np.ndarray, heads: Sequence[int], single_root: bool = True) -> float:
    """Log-probability of one tree: its arc scores minus log Z."""
    problems = tree_violations(list(heads), single_root)
    if problems:
        raise ValueError("invalid tree: " + "; ".join(problems))
    logp = np.asarray(logp, dtype=np.float64)
    cols = np.arange(logp.shape[1])
    arc_sum = float(np.sum(logp[np.asarray(heads), cols]))
    return arc_sum - log_partition(logp, single_root)


def _label_terms(gold_scores: np.ndarray, label_ids: Sequence[int]):
    lsm = log_softmax(gold_scores, axis=1)
    cols = np.arange(len(label_ids))
    ids = np.asarray(label_ids, dtype=np.int64)
    loss = -float(lsm[cols, ids].sum())
    grad = np.exp(lsm)
    grad[cols, ids] -= 1.0
    return loss, grad


def loss(scores: np.ndarray, label_scores: np.ndarray, heads: Sequence[int],
         label_ids: Sequence[int], single_root: bool = True) -> float:
    """Per-token training loss of one sentence.

    Arc term: negative tree log-probability under the locally normalized
    scores.  Label term: cross-entropy of the gold label at the gold head.
    """
    n = len(heads)
    arc = -tree_log_prob(local_normalize(scores), heads, single_root)
    cols = np.arange(n)
    gold = np.asarray(label_scores)[np.asarray(heads), cols, :]
    lab, _ = _label_terms(gold, label_ids)
    return (arc + lab) / n


def arc_loss_grad(scores: np.ndarray, heads: Sequence[int], single_root: bool = True):
    """Negative tree log-probability and its gradient w.r.t. the raw scores."""
    logp = local_normalize(scores)
    n = logp.shape[1]
    cols = np.arange(n)
    heads = np.asarray(heads, dtype=np.int64)
    value = -(float(np.sum(logp[heads, cols])) - log_partition(logp, single_root))
    d_logp = arc_marginals(logp, single_root)
    d_logp[heads, cols] -= 1.0
    # back through the column log-softmax
    probs = np.exp(logp)
    d_scores = d_logp - probs * d_logp.sum(axis=0, keepdims=True)
    d_scores[~np.isfinite(logp)] = 0.0
    return value, d_scores


def batch_loss_and_grad(params: BiaffineParams, batch, single_root: bool = True):
    """Summed loss terms and parameter gradients over ``(X, heads, label_ids)`` items.

    Returns ``(arc_loss, label_loss, grads)``; nothing is token-averaged.
    """
    caches = scorer.encode_many([item[0] for item in batch], params)
    arc_total = label_total = 0.0
    d_arcs, d_labels, all_heads = [], [], []
    for cache, (_, heads, label_ids) in zip(caches, batch):
        problems = tree_violations(list(heads), single_root)
        if problems:
            raise ValueError("invalid gold tree: " + "; ".join(problems))
        S = scorer.arc_scores_from_cache(cache, params)
        arc_value, d_arc = arc_loss_grad(S, heads, single_root)
        gold = scorer.gold_label_scores(cache, params, heads)
        label_value, d_label = _label_terms(gold, label_ids)
        arc_total += arc_value
        label_total += label_value
        d_arcs.append(d_arc)
        d_labels.append(d_label)
        all_heads.append(heads)
    grads = scorer.backward_many(params, caches, d_arcs, d_labels, all_heads)
    return arc_total, label_total, grads


def loss_and_grad(params: BiaffineParams, word_vectors: np.ndarray, heads: Sequence[int],
                  label_ids: Sequence[int], single_root: bool = True):
    """Summed (not token-averaged) loss of one sentence and parameter gradients."""
    return batch_loss_and_grad(params, [(word_vectors, heads, label_ids)], single_root)
