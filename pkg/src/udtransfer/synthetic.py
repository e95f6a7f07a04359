"""Seeded toy treebanks and matching WordPiece vocabularies."""

from __future__ import annotations

import numpy as np

from .subword import SubwordVocab
from .treebank import Sentence, Token, attach_char_spans

SYLLABLES = tuple(c + v for c in "bdfgklmnprstvz" for v in "aeiou")
LABELS = ("nsubj", "obj", "amod", "det", "obl", "advmod", "nmod:poss", "conj")


def random_heads(n: int, rng: np.random.Generator) -> list[int]:
    """Uniform-ish random single-root tree, possibly non-projective."""
    order = rng.permutation(n) + 1
    heads = [0] * n
    for k in range(1, n):
        heads[order[k] - 1] = int(order[rng.integers(0, k)])
    heads[order[0] - 1] = 0
    return heads


def make_treebank(num_sentences: int, seed: int = 0, min_len: int = 3, max_len: int = 8,
                  labels=LABELS, prefix: str = "syn") -> list[Sentence]:
    rng = np.random.default_rng(seed)
    sentences = []
    for k in range(num_sentences):
        n = int(rng.integers(min_len, max_len + 1))
        heads = random_heads(n, rng)
        forms = ["".join(SYLLABLES[i] for i in rng.integers(0, len(SYLLABLES),
                                                             size=rng.integers(1, 4)))
                 for _ in range(n)]
        tokens = tuple(
            Token(index=i + 1, form=forms[i], gold_head=heads[i],
                  gold_label="root" if heads[i] == 0 else labels[rng.integers(0, len(labels))])
            for i in range(n))
        sentences.append(attach_char_spans(Sentence(tokens=tokens, sent_id=f"{prefix}-{k + 1}",
                                                    raw_text=" ".join(forms))))
    return sentences


def make_vocab() -> SubwordVocab:
    pieces = ["[UNK]"] + list(SYLLABLES) + ["##" + s for s in SYLLABLES]
    return SubwordVocab.from_pieces(pieces)
