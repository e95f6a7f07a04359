"""CoNLL-U reading and writing plus the dependency-tree data model.

Only basic syntactic word lines (integer IDs) take part in scoring and
decoding.  Multiword-token ranges (``1-2``) and empty nodes (``8.1``) are
kept verbatim so that a parse/write cycle reproduces the input.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence, TextIO, Union

ID, FORM, LEMMA, UPOS, XPOS, FEATS, HEAD, DEPREL, DEPS, MISC = range(10)

_INT_ID = re.compile(r"^[1-9][0-9]*$")
_RANGE_ID = re.compile(r"^([1-9][0-9]*)-([1-9][0-9]*)$")
_EMPTY_ID = re.compile(r"^([0-9]+)\.([1-9][0-9]*)$")


class ConlluError(ValueError):
    """Raised on malformed CoNLL-U input."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class Token:
    """One syntactic word.

    ``gold_head`` is 0 for ROOT and ``None`` when the HEAD column is ``_``
    (unannotated input).  ``char_span`` is a half-open ``(start, end)``
    offset pair into the sentence's raw text, or ``None`` if unknown.
    """

    index: int
    form: str
    gold_head: int | None = None
    gold_label: str = "_"
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    deps: str = "_"
    misc: str = "_"
    char_span: tuple[int, int] | None = None

    def columns(self) -> list[str]:
        head = "_" if self.gold_head is None else str(self.gold_head)
        return [str(self.index), self.form, self.lemma, self.upos, self.xpos,
                self.feats, head, self.gold_label, self.deps, self.misc]


@dataclass(frozen=True)
class Sentence:
    """A CoNLL-U sentence block.

    ``extras`` holds multiword-token and empty-node lines as
    ``(position, columns)`` where ``position`` counts the basic tokens
    written before the line.
    """

    tokens: tuple[Token, ...]
    sent_id: str = ""
    raw_text: str | None = None
    comments: tuple[str, ...] = ()
    extras: tuple[tuple[int, tuple[str, ...]], ...] = field(default=())

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def heads(self) -> list[int | None]:
        return [t.gold_head for t in self.tokens]

    @property
    def labels(self) -> list[str]:
        return [t.gold_label for t in self.tokens]

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    def multiword_ranges(self) -> list[tuple[int, int, str]]:
        """``(first, last, surface form)`` for every multiword token."""
        out = []
        for _, cols in self.extras:
            m = _RANGE_ID.match(cols[ID])
            if m:
                out.append((int(m.group(1)), int(m.group(2)), cols[FORM]))
        return out

    def with_annotation(self, heads: Sequence[int], labels: Sequence[str]) -> "Sentence":
        """Copy of the sentence with HEAD and DEPREL replaced."""
        if len(heads) != len(self.tokens) or len(labels) != len(self.tokens):
            raise ValueError("annotation length does not match sentence length")
        tokens = tuple(replace(t, gold_head=int(h), gold_label=lab)
                       for t, h, lab in zip(self.tokens, heads, labels))
        return replace(self, tokens=tokens)


def _split_columns(line: str, lineno: int) -> list[str]:
    cols = line.split("\t")
    if len(cols) != 10:
        raise ConlluError(f"expected 10 tab-separated columns, found {len(cols)}", lineno)
    return cols


def _comment_value(comment: str, key: str) -> str | None:
    m = re.match(r"^#\s*" + key + r"\s*=\s?(.*)$", comment)
    return m.group(1) if m else None


def _build_sentence(comments, rows, extras, first_line) -> Sentence:
    sent_id = ""
    raw_text = None
    for c in comments:
        v = _comment_value(c, "sent_id")
        if v is not None and not sent_id:
            sent_id = v.strip()
        v = _comment_value(c, "text")
        if v is not None and raw_text is None:
            raw_text = v
    tokens = []
    for lineno, cols in rows:
        head_col = cols[HEAD]
        if head_col == "_":
            head = None
        else:
            try:
                head = int(head_col)
            except ValueError:
                raise ConlluError(f"non-integer HEAD {head_col!r}", lineno) from None
            if head < 0:
                raise ConlluError(f"negative HEAD {head}", lineno)
        tokens.append(Token(index=int(cols[ID]), form=cols[FORM], gold_head=head,
                            gold_label=cols[DEPREL], lemma=cols[LEMMA], upos=cols[UPOS],
                            xpos=cols[XPOS], feats=cols[FEATS], deps=cols[DEPS],
                            misc=cols[MISC]))
    sentence = Sentence(tokens=tuple(tokens), sent_id=sent_id, raw_text=raw_text,
                        comments=tuple(comments), extras=tuple(extras))
    if raw_text is not None:
        sentence = attach_char_spans(sentence)
    return sentence


def parse_conllu(text: Union[str, TextIO]) -> list[Sentence]:
    """Parse CoNLL-U text (a string or a text stream) into sentences."""
    if not isinstance(text, str):
        text = text.read()
    sentences: list[Sentence] = []
    comments: list[str] = []
    rows: list[tuple[int, list[str]]] = []
    extras: list[tuple[int, tuple[str, ...]]] = []
    first_line = 1

    def flush():
        nonlocal comments, rows, extras
        if rows or comments or extras:
            if not rows:
                raise ConlluError("sentence block without syntactic words", first_line)
            sentences.append(_build_sentence(comments, rows, extras, first_line))
        comments, rows, extras = [], [], []

    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.endswith("\r"):
            line = line[:-1]
        if not line.strip():
            flush()
            first_line = lineno + 1
            continue
        if line.startswith("#"):
            if rows or extras:
                raise ConlluError("comment line inside a token block", lineno)
            comments.append(line)
            continue
        cols = _split_columns(line, lineno)
        tid = cols[ID]
        if _INT_ID.match(tid):
            expected = len(rows) + 1
            if int(tid) != expected:
                raise ConlluError(f"word ID {tid} out of sequence (expected {expected})", lineno)
            rows.append((lineno, cols))
        elif _RANGE_ID.match(tid) or _EMPTY_ID.match(tid):
            extras.append((len(rows), tuple(cols)))
        else:
            raise ConlluError(f"malformed ID {tid!r}", lineno)
    flush()
    return sentences


def write_conllu(sentences: Iterable[Sentence]) -> str:
    """Serialize sentences; blocks are separated by exactly one blank line."""
    out = io.StringIO()
    for sentence in sentences:
        if sentence.comments:
            for c in sentence.comments:
                out.write(c + "\n")
        else:
            if sentence.sent_id:
                out.write(f"# sent_id = {sentence.sent_id}\n")
            if sentence.raw_text is not None:
                out.write(f"# text = {sentence.raw_text}\n")
        extras = list(sentence.extras)
        k = 0
        for i, token in enumerate(sentence.tokens):
            while k < len(extras) and extras[k][0] <= i:
                out.write("\t".join(extras[k][1]) + "\n")
                k += 1
            out.write("\t".join(token.columns()) + "\n")
        for _, cols in extras[k:]:
            out.write("\t".join(cols) + "\n")
        out.write("\n")
    return out.getvalue()


def read_conllu(path) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return parse_conllu(f)


def save_conllu(path, sentences: Iterable[Sentence]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(write_conllu(sentences))


def surface_units(sentence: Sentence) -> list[tuple[str, list[int]]]:
    """Surface tokens in order as ``(form, word indices covered)``.

    Words inside a multiword token share that token's surface form.
    """
    ranges = {first: (last, form) for first, last, form in sentence.multiword_ranges()}
    units = []
    i = 1
    n = len(sentence.tokens)
    while i <= n:
        if i in ranges:
            last, form = ranges[i]
            last = min(last, n)
            units.append((form, list(range(i, last + 1))))
            i = last + 1
        else:
            units.append((sentence.tokens[i - 1].form, [i]))
            i += 1
    return units


def attach_char_spans(sentence: Sentence) -> Sentence:
    """Recover character offsets by greedy left-to-right matching of forms.

    Whitespace in the raw text is skipped between surface tokens.  A token
    whose form does not appear at the current position gets no span.
    """
    text = sentence.raw_text
    if text is None:
        return sentence
    spans: dict[int, tuple[int, int]] = {}
    pos = 0
    for form, words in surface_units(sentence):
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if form and text.startswith(form, pos):
            for w in words:
                spans[w] = (pos, pos + len(form))
            pos += len(form)
    tokens = tuple(replace(t, char_span=spans.get(t.index)) for t in sentence.tokens)
    return replace(sentence, tokens=tokens)


def tree_violations(heads: Sequence[int | None], single_root: bool = True) -> list[str]:
    """Structural problems of a head assignment; an empty list means a valid tree.

    ``heads[i]`` is the head of word ``i + 1``; 0 denotes ROOT.
    """
    n = len(heads)
    problems = []
    valid = True
    for i, h in enumerate(heads, start=1):
        if h is None:
            problems.append(f"token {i}: missing head")
            valid = False
        elif not 0 <= h <= n:
            problems.append(f"token {i}: head {h} out of range")
            valid = False
        elif h == i:
            problems.append(f"token {i}: self-loop")
            valid = False
    if valid:
        # 0 = unvisited, 1 = on current path, 2 = known to reach ROOT
        state = [0] * (n + 1)
        state[0] = 2
        for start in range(1, n + 1):
            path = []
            v = start
            while state[v] == 0:
                state[v] = 1
                path.append(v)
                v = heads[v - 1]
            if state[v] == 1:
                cycle = path[path.index(v):]
                problems.append("cycle {" + ",".join(map(str, sorted(cycle))) + "}")
            for u in path:
                state[u] = 2
    if single_root:
        roots = sum(1 for h in heads if h == 0)
        if roots != 1:
            problems.append(f"{roots} root children")
    return problems


def validate_tree(sentence: Sentence, single_root: bool = True) -> list[str]:
    return tree_violations(sentence.heads, single_root)


def is_tree(heads: Sequence[int | None], single_root: bool = True) -> bool:
    return not tree_violations(heads, single_root)
