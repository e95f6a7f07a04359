"""Per-subword context vectors from a frozen provider.

Two backends: ``pseudo`` derives vectors from a seeded hash of the subword
string and its position, ``file`` looks them up in an ``EMB v1`` table.
"""

from __future__ import annotations

import hashlib
import re
import struct
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

DEFAULT_DIM = 768

_HEADER = re.compile(r"^EMB v1 dim=(\d+) count=(\d+)\s*$")


class EmbeddingError(ValueError):
    pass


@dataclass(frozen=True)
class EmbeddingProvider:
    backend: str = "pseudo"
    dim: int = DEFAULT_DIM
    seed: int = 0
    table: Mapping[tuple[str, int], np.ndarray] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if self.backend not in ("pseudo", "file"):
            raise ValueError(f"unknown embedding backend {self.backend!r}")
        if self.dim <= 0:
            raise ValueError("embedding dimension must be positive")

    def embed(self, subwords: Sequence[str], sent_id: str) -> np.ndarray:
        return embed_sentence(subwords, sent_id, self)

    def covers(self, sent_id: str, m: int) -> bool:
        if self.backend == "pseudo":
            return True
        return all((sent_id, j) in self.table for j in range(m))


def _pseudo_vector(subword: str, position: int, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(
        f"{seed}\x1f{position}\x1f{subword}".encode("utf-8"), digest_size=16).digest()
    key = struct.unpack("<QQ", digest)
    rng = np.random.Generator(np.random.PCG64(list(key)))
    return rng.uniform(-0.5, 0.5, size=dim)


def embed_sentence(subwords: Sequence[str], sent_id: str, provider: EmbeddingProvider) -> np.ndarray:
    """m x D matrix of vectors for the subword sequence of one sentence."""
    m = len(subwords)
    out = np.empty((m, provider.dim), dtype=np.float64)
    if provider.backend == "pseudo":
        for j, piece in enumerate(subwords):
            out[j] = _pseudo_vector(piece, j, provider.dim, provider.seed)
        return out
    for j in range(m):
        try:
            out[j] = provider.table[(sent_id, j)]
        except KeyError:
            raise EmbeddingError(
                f"no vector for sentence {sent_id!r} position {j}") from None
    return out


def load_embedding_file(path) -> EmbeddingProvider:
    """Read an ``EMB v1`` table into a file-backed provider."""
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        if not header.strip():
            raise EmbeddingError(f"{path}: no header")
        m = _HEADER.match(header.strip())
        if not m:
            raise EmbeddingError(f"{path}: bad header {header.strip()!r}")
        dim, count = int(m.group(1)), int(m.group(2))
        if dim <= 0:
            raise EmbeddingError(f"{path}: dimension must be positive")
        table = {}
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != dim + 2:
                raise EmbeddingError(
                    f"{path}:{lineno}: expected {dim + 2} fields, found {len(parts)}")
            try:
                key = (parts[0], int(parts[1]))
                vec = np.array([float(x) for x in parts[2:]], dtype=np.float64)
            except ValueError as exc:
                raise EmbeddingError(f"{path}:{lineno}: {exc}") from None
            if key in table:
                raise EmbeddingError(f"{path}:{lineno}: duplicate record {key}")
            table[key] = vec
    if len(table) != count:
        raise EmbeddingError(f"{path}: header announces {count} records, found {len(table)}")
    return EmbeddingProvider(backend="file", dim=dim, table=table)


def write_embedding_file(path, records: Mapping[str, np.ndarray]) -> None:
    """Write ``sent_id -> (m x D) matrix`` records as an ``EMB v1`` table."""
    dims = {np.asarray(v).shape[1] for v in records.values()}
    if len(dims) > 1:
        raise ValueError("all matrices must share one dimension")
    dim = dims.pop() if dims else 1
    count = sum(np.asarray(v).shape[0] for v in records.values())
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"EMB v1 dim={dim} count={count}\n")
        for sent_id, matrix in records.items():
            if any(ch.isspace() for ch in sent_id) or not sent_id:
                raise ValueError(f"sentence id {sent_id!r} must be non-empty without whitespace")
            for j, row in enumerate(np.asarray(matrix, dtype=np.float64)):
                f.write(sent_id + " " + str(j) + " " + " ".join(repr(float(x)) for x in row) + "\n")
