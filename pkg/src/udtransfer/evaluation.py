"""UAS/LAS scoring with CoNLL18 semantics.

Two modes:

* ``gold``: system and gold share the tokenization; scores are accuracies.
* ``raw``: tokens are aligned by character span over the whitespace-free
  character stream of the whole corpus, so system sentence and token
  segmentation may differ from the gold one.  Scores are precision over
  system words, recall over gold words and their F1.

Labels are compared without relation subtypes (``nmod:poss`` == ``nmod``)
and every word counts, punctuation included.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

from .treebank import Sentence, surface_units


class EvaluationError(ValueError):
    pass


def universal_label(label: str) -> str:
    return label.split(":", 1)[0]


def _f1(p: float, r: float) -> float:
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _pct(num: int, den: int) -> float:
    return 0.0 if den == 0 else 100.0 * num / den


@dataclass(frozen=True)
class Metrics:
    uas_precision: float
    uas_recall: float
    uas_f1: float
    las_precision: float
    las_recall: float
    las_f1: float
    aligned_count: int
    gold_count: int
    system_count: int
    uas_correct: int
    las_correct: int

    @classmethod
    def from_counts(cls, uas_correct, las_correct, aligned, gold, system) -> "Metrics":
        up, ur = _pct(uas_correct, system), _pct(uas_correct, gold)
        lp, lr = _pct(las_correct, system), _pct(las_correct, gold)
        return cls(up, ur, _f1(up, ur), lp, lr, _f1(lp, lr), aligned, gold, system,
                   uas_correct, las_correct)

    @property
    def uas(self) -> float:
        return self.uas_f1

    @property
    def las(self) -> float:
        return self.las_f1

    def merge(self, other: "Metrics") -> "Metrics":
        return Metrics.from_counts(self.uas_correct + other.uas_correct,
                                   self.las_correct + other.las_correct,
                                   self.aligned_count + other.aligned_count,
                                   self.gold_count + other.gold_count,
                                   self.system_count + other.system_count)

    def to_tsv(self) -> str:
        rows = [("LAS", f"{self.las_f1:.2f}"), ("UAS", f"{self.uas_f1:.2f}"),
                ("LAS_precision", f"{self.las_precision:.2f}"),
                ("LAS_recall", f"{self.las_recall:.2f}"),
                ("UAS_precision", f"{self.uas_precision:.2f}"),
                ("UAS_recall", f"{self.uas_recall:.2f}"),
                ("aligned", str(self.aligned_count)), ("gold", str(self.gold_count)),
                ("system", str(self.system_count))]
        return "".join(f"{k}\t{v}\n" for k, v in rows)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def align_tokens(gold: Sentence, system: Sentence) -> list[tuple[int, int]]:
    """Pairs ``(gold index, system index)`` of words with identical spans.

    Words inside one multiword token share its span and are paired in order.
    """
    def keyed(sentence, side):
        keys = {}
        seen: dict[tuple[int, int], int] = {}
        for t in sentence.tokens:
            if t.char_span is None:
                raise EvaluationError(
                    f"{side} word {t.index} of sentence {sentence.sent_id!r} has no character "
                    "offsets; use gold-tokenization mode")
            k = seen.get(t.char_span, 0)
            seen[t.char_span] = k + 1
            keys[(t.char_span, k)] = t.index
        return keys

    g = keyed(gold, "gold")
    s = keyed(system, "system")
    return sorted((g[k], s[k]) for k in g.keys() & s.keys())


def _count_pair(gold_label, sys_label, head_matches):
    if not head_matches:
        return 0, 0
    return 1, int(universal_label(gold_label) == universal_label(sys_label))


def score_gold(gold: Sequence[Sentence], system: Sequence[Sentence]) -> Metrics:
    if len(gold) != len(system):
        raise EvaluationError(f"gold has {len(gold)} sentences, system has {len(system)}")
    uas = las = total = 0
    for k, (g, s) in enumerate(zip(gold, system)):
        if len(g) != len(s):
            raise EvaluationError(
                f"sentence {k + 1}: gold has {len(g)} words, system has {len(s)}")
        for gt, st in zip(g.tokens, s.tokens):
            u, l = _count_pair(gt.gold_label, st.gold_label,
                               gt.gold_head is not None and gt.gold_head == st.gold_head)
            uas += u
            las += l
        total += len(g)
    return Metrics.from_counts(uas, las, total, total, total)


def _document_words(corpus: Sequence[Sentence]):
    """Character stream plus per-word (key, global head, label) for a corpus."""
    chars: list[str] = []
    words = []  # (key, global head id, -1 for ROOT or None, label)
    pos = 0
    offset = 0
    for sentence in corpus:
        spans = {}
        for form, covered in surface_units(sentence):
            stripped = "".join(ch for ch in form if not ch.isspace())
            chars.append(stripped)
            for k, w in enumerate(covered):
                spans[w] = ((pos, pos + len(stripped)), k)
            pos += len(stripped)
        for t in sentence.tokens:
            if t.gold_head is None:
                head = None
            elif t.gold_head == 0:
                head = -1
            else:
                head = offset + t.gold_head - 1
            words.append((spans[t.index], head, t.gold_label))
        offset += len(sentence)
    return "".join(chars), words


def score_raw(gold: Sequence[Sentence], system: Sequence[Sentence]) -> Metrics:
    gold_text, gold_words = _document_words(gold)
    sys_text, sys_words = _document_words(system)
    if gold_text != sys_text:
        i = next((k for k, (a, b) in enumerate(zip(gold_text, sys_text)) if a != b),
                 min(len(gold_text), len(sys_text)))
        raise EvaluationError(
            f"gold and system texts differ at character {i}: "
            f"{gold_text[i:i + 20]!r} vs {sys_text[i:i + 20]!r}")
    gold_by_key = {key: gid for gid, (key, _, _) in enumerate(gold_words)}
    sys_to_gold = [gold_by_key.get(key) for key, _, _ in sys_words]
    uas = las = aligned = 0
    for sid, (key, s_head, s_label) in enumerate(sys_words):
        gid = sys_to_gold[sid]
        if gid is None:
            continue
        aligned += 1
        _, g_head, g_label = gold_words[gid]
        if s_head is None:
            ok = False
        elif s_head == -1:
            ok = g_head == -1
        else:
            ok = g_head is not None and g_head != -1 and sys_to_gold[s_head] == g_head
        u, l = _count_pair(g_label, s_label, ok)
        uas += u
        las += l
    return Metrics.from_counts(uas, las, aligned, len(gold_words), len(sys_words))


def score(gold: Sequence[Sentence], system: Sequence[Sentence], mode: str = "gold") -> Metrics:
    """Corpus-level UAS/LAS of ``system`` against ``gold``."""
    if mode == "gold":
        return score_gold(gold, system)
    if mode == "raw":
        return score_raw(gold, system)
    raise ValueError(f"unknown evaluation mode {mode!r}")
