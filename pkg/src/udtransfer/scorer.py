"""Deep biaffine arc and label scoring.

Row ``h`` of every score table is a candidate head (0 = ROOT, represented by
a learned vector), column ``c`` is dependent word ``c + 1``.  Self-arcs are
masked with ``-inf``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

CHECKPOINT_FORMAT = "udtransfer-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class BiaffineParams:
    """Parameter tensors of the scorer.

    Projection weights are stored input-major (``D x out``).  ``arc_U`` is
    ``(arc_dim + 1) x arc_dim`` (bias row on the head side) and ``label_U``
    is ``R x (label_dim + 1) x (label_dim + 1)``.
    """

    root: np.ndarray
    arc_head_W: np.ndarray
    arc_head_b: np.ndarray
    arc_dep_W: np.ndarray
    arc_dep_b: np.ndarray
    label_head_W: np.ndarray
    label_head_b: np.ndarray
    label_dep_W: np.ndarray
    label_dep_b: np.ndarray
    arc_U: np.ndarray
    label_U: np.ndarray

    @property
    def dim(self) -> int:
        return self.root.shape[0]

    @property
    def arc_dim(self) -> int:
        return self.arc_head_W.shape[1]

    @property
    def label_dim(self) -> int:
        return self.label_head_W.shape[1]

    @property
    def num_labels(self) -> int:
        return self.label_U.shape[0]

    def names(self) -> list[str]:
        return [f.name for f in fields(self)]

    def as_dict(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in self.names()}

    def copy(self) -> "BiaffineParams":
        return BiaffineParams(**{k: v.copy() for k, v in self.as_dict().items()})

    def zeros_like(self) -> "BiaffineParams":
        return BiaffineParams(**{k: np.zeros_like(v) for k, v in self.as_dict().items()})

    def check(self) -> None:
        D, A, L, R = self.dim, self.arc_dim, self.label_dim, self.num_labels
        expected = {
            "root": (D,), "arc_head_W": (D, A), "arc_head_b": (A,),
            "arc_dep_W": (D, A), "arc_dep_b": (A,), "label_head_W": (D, L),
            "label_head_b": (L,), "label_dep_W": (D, L), "label_dep_b": (L,),
            "arc_U": (A + 1, A), "label_U": (R, L + 1, L + 1),
        }
        for name, shape in expected.items():
            if getattr(self, name).shape != shape:
                raise ValueError(f"parameter {name} has shape {getattr(self, name).shape}, "
                                 f"expected {shape}")


def init_params(dim: int, num_labels: int, arc_dim: int = 400, label_dim: int = 100,
                rng: np.random.Generator | None = None) -> BiaffineParams:
    """Uniform fan-in projections, zero biases and zero biaffine weights."""
    rng = rng if rng is not None else np.random.default_rng(0)
    bound = 1.0 / np.sqrt(dim)

    def proj(out):
        return rng.uniform(-bound, bound, size=(dim, out))

    return BiaffineParams(
        root=rng.uniform(-0.5, 0.5, size=dim),
        arc_head_W=proj(arc_dim), arc_head_b=np.zeros(arc_dim),
        arc_dep_W=proj(arc_dim), arc_dep_b=np.zeros(arc_dim),
        label_head_W=proj(label_dim), label_head_b=np.zeros(label_dim),
        label_dep_W=proj(label_dim), label_dep_b=np.zeros(label_dim),
        arc_U=np.zeros((arc_dim + 1, arc_dim)),
        label_U=np.zeros((num_labels, label_dim + 1, label_dim + 1)),
    )


def _with_bias(a: np.ndarray) -> np.ndarray:
    return np.concatenate([a, np.ones((a.shape[0], 1))], axis=1)


@dataclass
class ForwardCache:
    X0: np.ndarray       # (n+1) x D, ROOT vector first
    arc_head: np.ndarray  # (n+1) x (A+1), post-ReLU with bias column
    arc_dep: np.ndarray   # n x A
    label_head: np.ndarray  # (n+1) x (L+1)
    label_dep: np.ndarray   # n x (L+1)


def _check_input(word_vectors: np.ndarray, params: BiaffineParams) -> np.ndarray:
    X = np.asarray(word_vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError("word vectors must be an n x D matrix with n >= 1")
    if X.shape[1] != params.dim:
        raise ValueError(f"word vectors have dimension {X.shape[1]}, parameters expect {params.dim}")
    return X


def encode_many(word_vectors: Sequence[np.ndarray], params: BiaffineParams) -> list[ForwardCache]:
    """Per-sentence caches; projections run once over all words of the batch."""
    Xs = [_check_input(X, params) for X in word_vectors]
    X0 = np.vstack([row for X in Xs for row in (params.root[None, :], X)])
    head_rows = np.cumsum([0] + [X.shape[0] + 1 for X in Xs])
    is_root = np.zeros(X0.shape[0], dtype=bool)
    is_root[head_rows[:-1]] = True
    arc_h = _with_bias(np.maximum(X0 @ params.arc_head_W + params.arc_head_b, 0.0))
    lab_h = _with_bias(np.maximum(X0 @ params.label_head_W + params.label_head_b, 0.0))
    words = X0[~is_root]
    arc_d = np.maximum(words @ params.arc_dep_W + params.arc_dep_b, 0.0)
    lab_d = _with_bias(np.maximum(words @ params.label_dep_W + params.label_dep_b, 0.0))
    caches = []
    for k, X in enumerate(Xs):
        a, b = head_rows[k], head_rows[k + 1]
        da, db = a - k, b - k - 1
        caches.append(ForwardCache(X0[a:b], arc_h[a:b], arc_d[da:db], lab_h[a:b], lab_d[da:db]))
    return caches


def encode(word_vectors: np.ndarray, params: BiaffineParams) -> ForwardCache:
    return encode_many([word_vectors], params)[0]


def mask_self_arcs(scores: np.ndarray) -> np.ndarray:
    n = scores.shape[1]
    idx = np.arange(n)
    scores[idx + 1, idx] = -np.inf
    return scores


def arc_scores_from_cache(cache: ForwardCache, params: BiaffineParams) -> np.ndarray:
    S = cache.arc_head @ params.arc_U @ cache.arc_dep.T
    return mask_self_arcs(S)


def label_scores_from_cache(cache: ForwardCache, params: BiaffineParams) -> np.ndarray:
    left = np.matmul(cache.label_head[None, :, :], params.label_U)  # R x (n+1) x (L+1)
    T = np.matmul(left, cache.label_dep.T).transpose(1, 2, 0)     # (n+1) x n x R
    T = np.ascontiguousarray(T)
    n = T.shape[1]
    idx = np.arange(n)
    T[idx + 1, idx, :] = -np.inf
    return T


def arc_scores(word_vectors: np.ndarray, params: BiaffineParams) -> np.ndarray:
    """(n+1) x n arc score matrix."""
    return arc_scores_from_cache(encode(word_vectors, params), params)


def label_scores(word_vectors: np.ndarray, params: BiaffineParams) -> np.ndarray:
    """(n+1) x n x R label score table."""
    return label_scores_from_cache(encode(word_vectors, params), params)


def gold_label_scores(cache: ForwardCache, params: BiaffineParams,
                      heads: Sequence[int]) -> np.ndarray:
    """n x R label scores restricted to the arcs ``(heads[c], c)``."""
    H = cache.label_head[np.asarray(heads, dtype=np.int64)]
    left = np.matmul(H[None, :, :], params.label_U)  # R x n x (L+1)
    return (left * cache.label_dep[None, :, :]).sum(axis=2).T


def backward_many(params: BiaffineParams, caches: Sequence[ForwardCache],
                  d_arcs: Sequence[np.ndarray], d_labels: Sequence[np.ndarray],
                  label_heads: Sequence[Sequence[int]]) -> BiaffineParams:
    """Parameter gradients summed over sentences, given score gradients.

    ``d_arcs[k]`` is the (n+1) x n gradient of sentence k's arc scores (zero
    on masked cells); ``d_labels[k]`` is the n x R gradient of its label
    scores taken at heads ``label_heads[k]``.
    """
    A, L = params.arc_dim, params.label_dim
    arc_U = np.zeros_like(params.arc_U)
    label_U = np.zeros_like(params.label_U)
    d_zh, d_zd, d_zlh, d_zld = [], [], [], []
    for cache, d_arc, d_label, heads in zip(caches, d_arcs, d_labels, label_heads):
        # arc biaffine: S = H1 U Dᵀ
        arc_U += cache.arc_head.T @ d_arc @ cache.arc_dep
        d_head1 = d_arc @ cache.arc_dep @ params.arc_U.T
        d_dep = d_arc.T @ cache.arc_head @ params.arc_U
        d_zh.append(d_head1[:, :A] * (cache.arc_head[:, :A] > 0))
        d_zd.append(d_dep * (cache.arc_dep > 0))

        heads = np.asarray(heads, dtype=np.int64)
        H = cache.label_head[heads]
        Dl = cache.label_dep
        weighted = d_label.T[:, :, None] * H[None, :, :]           # R x n x (L+1)
        label_U += np.matmul(weighted.transpose(0, 2, 1), Dl[None, :, :])
        UD = np.matmul(params.label_U, Dl.T)                       # R x (L+1) x n
        d_H = np.einsum("cr,ric->ci", d_label, UD)
        UH = np.matmul(params.label_U.transpose(0, 2, 1), H.T)     # R x (L+1) x n
        d_Dl = np.einsum("cr,rjc->cj", d_label, UH)
        d_lh1 = np.zeros_like(cache.label_head)
        np.add.at(d_lh1, heads, d_H)
        d_zlh.append(d_lh1[:, :L] * (cache.label_head[:, :L] > 0))
        d_zld.append(d_Dl[:, :L] * (Dl[:, :L] > 0))

    X0 = np.vstack([c.X0 for c in caches])
    X = np.vstack([c.X0[1:] for c in caches])
    d_zh, d_zd = np.vstack(d_zh), np.vstack(d_zd)
    d_zlh, d_zld = np.vstack(d_zlh), np.vstack(d_zld)
    d_X0 = d_zh @ params.arc_head_W.T + d_zlh @ params.label_head_W.T
    roots = np.cumsum([0] + [c.X0.shape[0] for c in caches[:-1]])
    # gradients w.r.t. word vectors would feed a trainable encoder; the provider is frozen
    return BiaffineParams(
        root=d_X0[roots].sum(axis=0),
        arc_head_W=X0.T @ d_zh, arc_head_b=d_zh.sum(axis=0),
        arc_dep_W=X.T @ d_zd, arc_dep_b=d_zd.sum(axis=0),
        label_head_W=X0.T @ d_zlh, label_head_b=d_zlh.sum(axis=0),
        label_dep_W=X.T @ d_zld, label_dep_b=d_zld.sum(axis=0),
        arc_U=arc_U, label_U=label_U,
    )


def backward(params: BiaffineParams, cache: ForwardCache, d_arc: np.ndarray,
             d_label: np.ndarray, label_heads: Sequence[int]) -> BiaffineParams:
    return backward_many(params, [cache], [d_arc], [d_label], [label_heads])


def save_checkpoint(path, params: BiaffineParams, labels: Sequence[str],
                    extra: dict | None = None) -> None:
    """Write parameters as a versioned, self-describing ``.npz`` table."""
    meta = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "labels": list(labels),
        "shapes": {k: list(v.shape) for k, v in params.as_dict().items()},
        "extra": extra or {},
    }
    with open(path, "wb") as f:
        np.savez(f, __meta__=np.array(json.dumps(meta, sort_keys=True)), **params.as_dict())


def load_checkpoint(path) -> tuple[BiaffineParams, list[str], dict]:
    with np.load(path, allow_pickle=False) as data:
        if "__meta__" not in data:
            raise ValueError(f"{path}: not a checkpoint (missing header)")
        meta = json.loads(str(data["__meta__"]))
        if meta.get("format") != CHECKPOINT_FORMAT:
            raise ValueError(f"{path}: unknown checkpoint format {meta.get('format')!r}")
        if meta.get("version") != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')}")
        arrays = {name: np.array(data[name]) for name in meta["shapes"]}
    for name, shape in meta["shapes"].items():
        if list(arrays[name].shape) != shape:
            raise ValueError(f"{path}: tensor {name} has shape {arrays[name].shape}, header says {shape}")
    params = BiaffineParams(**arrays)
    params.check()
    if len(meta["labels"]) != params.num_labels:
        raise ValueError(f"{path}: label inventory does not match label tensor")
    return params, meta["labels"], meta.get("extra", {})
