"""WordPiece segmentation, word/subword alignment and mean pooling."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .treebank import Sentence


@dataclass(frozen=True)
class SubwordVocab:
    """Immutable WordPiece vocabulary.

    ``pieces`` keeps file order so that ``id_of`` matches the line number
    of the vocabulary file (0-based).  No lowercasing is ever applied.
    """

    pieces: tuple[str, ...]
    unk_token: str = "[UNK]"
    prefix: str = "##"
    max_chars: int = 200

    def __post_init__(self):
        if not self.pieces:
            raise ValueError("vocabulary is empty")
        if self.unk_token not in self.pieces:
            raise ValueError(f"unk token {self.unk_token!r} missing from vocabulary")
        object.__setattr__(self, "_entries", frozenset(self.pieces))
        object.__setattr__(self, "_ids", {p: i for i, p in enumerate(self.pieces)})

    @classmethod
    def from_pieces(cls, pieces: Iterable[str], unk_token: str = "[UNK]", **kw) -> "SubwordVocab":
        pieces = list(dict.fromkeys(pieces))
        if unk_token not in pieces:
            pieces.append(unk_token)
        return cls(tuple(pieces), unk_token=unk_token, **kw)

    @property
    def entries(self) -> frozenset:
        return self._entries

    def __contains__(self, piece: str) -> bool:
        return piece in self._entries

    def __len__(self) -> int:
        return len(self.pieces)

    def id_of(self, piece: str) -> int:
        return self._ids.get(piece, self._ids[self.unk_token])


def load_vocab(path, unk_token: str = "[UNK]") -> SubwordVocab:
    """Read a vocabulary file with one subword per line."""
    with open(path, encoding="utf-8") as f:
        pieces = [line.rstrip("\n").rstrip("\r") for line in f]
    pieces = [p for p in pieces if p]
    return SubwordVocab(tuple(dict.fromkeys(pieces)), unk_token=unk_token)


def save_vocab(path, vocab: SubwordVocab) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in vocab.pieces:
            f.write(p + "\n")


def wordpiece_tokenize(word: str, vocab: SubwordVocab) -> list[str]:
    """Greedy longest-match-first segmentation of a single word.

    Falls back to ``[unk_token]`` for the whole word when some position has
    no matching piece, or when the word exceeds ``vocab.max_chars``.
    """
    if not word:
        raise ValueError("cannot tokenize an empty word")
    return kernels.wordpiece(word, vocab.entries, vocab.unk_token, vocab.prefix, vocab.max_chars)


@dataclass(frozen=True)
class SubwordAlignment:
    """Half-open subword range ``(start, stop)`` for each word, 0-based."""

    ranges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        pos = 0
        for start, stop in self.ranges:
            if start != pos or stop <= start:
                raise ValueError(f"ranges must be contiguous and non-empty: {self.ranges}")
            pos = stop

    @property
    def num_words(self) -> int:
        return len(self.ranges)

    @property
    def num_subwords(self) -> int:
        return self.ranges[-1][1] if self.ranges else 0

    @classmethod
    def from_lengths(cls, lengths: Sequence[int]) -> "SubwordAlignment":
        ranges = []
        pos = 0
        for k in lengths:
            ranges.append((pos, pos + k))
            pos += k
        return cls(tuple(ranges))


def tokenize_words(words: Sequence[str], vocab: SubwordVocab) -> tuple[list[str], SubwordAlignment]:
    subwords: list[str] = []
    lengths = []
    for w in words:
        pieces = wordpiece_tokenize(w, vocab)
        subwords.extend(pieces)
        lengths.append(len(pieces))
    return subwords, SubwordAlignment.from_lengths(lengths)


def align(sentence: Sentence, vocab: SubwordVocab) -> tuple[list[str], SubwordAlignment]:
    """Subword sequence of a sentence together with its word ranges."""
    return tokenize_words(sentence.forms, vocab)


def pool_word_vectors(subword_vectors: np.ndarray, alignment: SubwordAlignment) -> np.ndarray:
    """Mean of the subword rows belonging to each word (n x D result)."""
    vectors = np.asarray(subword_vectors, dtype=np.float64)
    if vectors.ndim != 2 or vectors.shape[0] != alignment.num_subwords:
        raise ValueError(
            f"expected {alignment.num_subwords} subword rows, got array of shape {vectors.shape}")
    starts = np.fromiter((r[0] for r in alignment.ranges), dtype=np.int64,
                         count=alignment.num_words)
    counts = np.fromiter((r[1] - r[0] for r in alignment.ranges), dtype=np.int64,
                         count=alignment.num_words)
    sums = np.add.reduceat(vectors, starts, axis=0) if len(starts) else vectors[:0]
    return sums / counts[:, None]
