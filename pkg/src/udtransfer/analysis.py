"""Transfer-analysis metrics, training-mix construction and report output.

* vocabulary overlap: share of test WordPiece types seen in the parser's
  training data, in percent;
* unsegmented word score: gold words per WordPiece token, in percent;
* average syntactic similarity: mean of ``1 - d`` between a test language
  and each training language.
"""

from __future__ import annotations

import io
import math
import os
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .flatconf import ConfigError, parse_flat
from .subword import SubwordVocab, wordpiece_tokenize
from .treebank import Sentence, read_conllu


def _pieces(corpus: Iterable[Sentence], vocab: SubwordVocab):
    for sentence in corpus:
        for form in sentence.forms:
            yield form, wordpiece_tokenize(form, vocab)


def wordpiece_types(corpus: Iterable[Sentence], vocab: SubwordVocab) -> set[str]:
    return {p for _, pieces in _pieces(corpus, vocab) for p in pieces}


def tau(train_corpus: Sequence[Sentence], test_corpus: Sequence[Sentence],
        vocab: SubwordVocab) -> float:
    """Percentage of test WordPiece types that also occur in the training data."""
    test_types = wordpiece_types(test_corpus, vocab)
    if not test_types:
        raise ValueError("test corpus has no WordPiece types")
    train_types = wordpiece_types(train_corpus, vocab)
    return 100.0 * len(test_types & train_types) / len(test_types)


def eta(test_corpus: Sequence[Sentence], vocab: SubwordVocab) -> float:
    """100 x gold words / WordPiece tokens; higher means less segmentation."""
    words = pieces = 0
    for _, segmented in _pieces(test_corpus, vocab):
        words += 1
        pieces += len(segmented)
    if pieces == 0:
        raise ValueError("test corpus is empty")
    return 100.0 * words / pieces


def cosine_distance(a: Sequence[float], b: Sequence[float]) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"feature vectors differ in length: {a.shape[0]} vs {b.shape[0]}")
    if (a < 0).any() or (b < 0).any():
        raise ValueError("typological feature values must be non-negative")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine distance is undefined for an all-zero feature vector")
    return float(1.0 - np.clip(a @ b / (na * nb), 0.0, 1.0))


def sigma_bar_from_distances(distances: Sequence[float]) -> float:
    if not distances:
        raise ValueError("at least one training language is required")
    for d in distances:
        if not 0.0 <= d <= 1.0:
            raise ValueError(f"syntactic distance {d} outside [0, 1]")
    return math.fsum(1.0 - d for d in distances) / len(distances)


def sigma_bar(test_features: Sequence[float],
              training_features: Sequence[Sequence[float]]) -> float:
    """Mean similarity ``1 - cosine distance`` to each training language."""
    return sigma_bar_from_distances([cosine_distance(test_features, f)
                                     for f in training_features])


@dataclass
class TypologyTable:
    """Language feature vectors (``LANGFEAT v1``) or pairwise distances (``DIST v1``)."""

    features: dict[str, list[float]] = field(default_factory=dict)
    distances: dict[tuple[str, str], float] = field(default_factory=dict)

    def distance(self, a: str, b: str) -> float:
        if self.distances:
            for key in ((a, b), (b, a)):
                if key in self.distances:
                    return self.distances[key]
            if a == b:
                return 0.0
            raise KeyError(f"no distance between {a!r} and {b!r}")
        try:
            return cosine_distance(self.features[a], self.features[b])
        except KeyError as exc:
            raise KeyError(f"no feature vector for language {exc.args[0]!r}") from None

    def sigma_bar(self, test_lang: str, train_langs: Sequence[str]) -> float:
        return sigma_bar_from_distances([self.distance(test_lang, t) for t in train_langs])


def parse_typology(text: str) -> TypologyTable:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ValueError("typology file is empty")
    header = lines[0].strip()
    table = TypologyTable()
    if header == "LANGFEAT v1":
        width = None
        for k, line in enumerate(lines[1:], start=2):
            lang, *values = line.split()
            vec = [float(v) for v in values]
            if width is None:
                width = len(vec)
            elif len(vec) != width:
                raise ValueError(f"row {k}: {len(vec)} features, expected {width}")
            table.features[lang] = vec
    elif header == "DIST v1":
        for k, line in enumerate(lines[1:], start=2):
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"row {k}: expected 'langA langB d'")
            table.distances[(parts[0], parts[1])] = float(parts[2])
    else:
        raise ValueError(f"unknown typology header {header!r}")
    return table


def load_typology(path) -> TypologyTable:
    with open(path, encoding="utf-8") as f:
        return parse_typology(f.read())


@dataclass
class MixSpec:
    """Per-language treebank sources (paths or parsed corpora) and word budgets."""

    sources: dict[str, object]
    budgets: dict[str, int]
    seed: int = 0
    total: int | None = None

    def __post_init__(self):
        if set(self.sources) != set(self.budgets):
            raise ValueError("every language needs both a source and a budget")
        for lang, b in self.budgets.items():
            if b <= 0:
                raise ValueError(f"budget for {lang} must be positive")
        if self.total is not None and self.total != sum(self.budgets.values()):
            raise ValueError(f"total budget {self.total} differs from the sum of "
                             f"language budgets {sum(self.budgets.values())}")


def parse_mix_spec(text: str, base_dir=None) -> MixSpec:
    """Flat ``key=value`` spec: ``seed``, ``total``, ``source.<lang>``, ``budget.<lang>``."""
    values = parse_flat(text)
    sources, budgets = {}, {}
    seed, total = 0, None
    for key, value in values.items():
        try:
            if key == "seed":
                seed = int(value)
            elif key == "total":
                total = int(value)
            elif key.startswith("source."):
                path = value
                if base_dir is not None and not os.path.isabs(path):
                    path = os.path.join(base_dir, path)
                sources[key[7:]] = path
            elif key.startswith("budget."):
                budgets[key[7:]] = int(value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"bad value for {key}: {value!r}") from None
    try:
        return MixSpec(sources, budgets, seed, total)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _take_budget(sentences: Sequence[Sentence], budget: int, rng: np.random.Generator,
                 lang: str) -> list[Sentence]:
    total_words = sum(len(s) for s in sentences)
    order = rng.permutation(len(sentences))
    if total_words <= budget:
        warnings.warn(f"{lang}: treebank has {total_words} words, not more than the budget "
                      f"{budget}; using all of it", stacklevel=3)
        return [sentences[i] for i in order]
    taken, count = [], 0
    for i in order:
        taken.append(sentences[i])
        count += len(sentences[i])
        if count >= budget:
            break
    return taken


def mix_treebanks(spec: MixSpec) -> tuple[list[Sentence], dict[str, int]]:
    """Seeded training mix; returns the corpus and realized words per language.

    Each language contributes sentences in shuffled order until its budget
    is first reached (the boundary sentence is kept); the blocks are then
    concatenated and shuffled together.
    """
    rng = np.random.default_rng(spec.seed)
    mixed: list[Sentence] = []
    realized = {}
    for lang in spec.sources:
        source = spec.sources[lang]
        if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
            try:
                sentences = read_conllu(source)
            except OSError as exc:
                raise OSError(f"cannot read treebank for {lang}: {exc}") from exc
        else:
            sentences = list(source)
        block = _take_budget(sentences, spec.budgets[lang], rng, lang)
        realized[lang] = sum(len(s) for s in block)
        mixed.extend(block)
    order = rng.permutation(len(mixed))
    return [mixed[i] for i in order], realized


REPORT_COLUMNS = ("lang", "LAS", "tau", "eta", "sigma_bar", "related")


@dataclass(frozen=True)
class TransferRecord:
    lang: str
    las: float
    tau: float
    eta: float
    sigma_bar: float
    related: bool

    def __post_init__(self):
        if not 0.0 <= self.tau <= 100.0 or not 0.0 <= self.eta <= 100.0:
            raise ValueError(f"{self.lang}: tau/eta must lie in [0, 100]")
        if not 0.0 <= self.sigma_bar <= 1.0:
            raise ValueError(f"{self.lang}: sigma_bar must lie in [0, 1]")


def emit_report(records: Iterable[TransferRecord]) -> tuple[str, str]:
    """Wide TSV sorted by LAS (descending) and a long-format plotting table."""
    rows = sorted(records, key=lambda r: (-r.las, r.lang))
    wide = io.StringIO()
    wide.write("\t".join(REPORT_COLUMNS) + "\n")
    long = io.StringIO()
    long.write("lang\tmetric\tvalue\n")
    for r in rows:
        wide.write(f"{r.lang}\t{r.las!r}\t{r.tau!r}\t{r.eta!r}\t{r.sigma_bar!r}\t"
                   f"{int(r.related)}\n")
        for metric, value in (("LAS", r.las), ("tau", r.tau), ("eta", r.eta),
                              ("sigma_bar", r.sigma_bar)):
            long.write(f"{r.lang}\t{metric}\t{value!r}\n")
    return wide.getvalue(), long.getvalue()


def read_report(text: str) -> list[TransferRecord]:
    lines = text.splitlines()
    if not lines or tuple(lines[0].split("\t")) != REPORT_COLUMNS:
        raise ValueError("not a transfer report: bad header")
    out = []
    for line in lines[1:]:
        if not line:
            continue
        lang, las, t, e, s, rel = line.split("\t")
        out.append(TransferRecord(lang, float(las), float(t), float(e), float(s), rel == "1"))
    return out


def transfer_record(lang: str, las: float, train_corpus, test_corpus, vocab: SubwordVocab,
                    typology: TypologyTable | None, train_langs: Sequence[str],
                    related: bool) -> TransferRecord:
    sb = typology.sigma_bar(lang, train_langs) if typology is not None else 0.0
    return TransferRecord(lang, las, tau(train_corpus, test_corpus, vocab),
                          eta(test_corpus, vocab), sb, related)


def correlation_table(records: Sequence[TransferRecord]) -> Mapping[str, float]:
    """Pearson correlation of LAS with each analysis metric."""
    if len(records) < 2:
        return {}
    las = np.array([r.las for r in records])
    out = {}
    for name in ("tau", "eta", "sigma_bar"):
        vals = np.array([getattr(r, name) for r in records])
        if np.std(vals) == 0 or np.std(las) == 0:
            out[name] = float("nan")
        else:
            out[name] = float(np.corrcoef(las, vals)[0, 1])
    return out
