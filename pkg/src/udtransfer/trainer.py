"""Adam training with periodic dev evaluation and early stopping."""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import decoder, mtt, scorer
from .embeddings import EmbeddingProvider
from .evaluation import score
from .flatconf import dump_flat
from .scorer import BiaffineParams
from .subword import SubwordVocab, align, pool_word_vectors
from .treebank import Sentence, tree_violations

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    learning_rate: float = 5e-6
    arc_dim: int = 400
    label_dim: int = 100
    eval_every: int = 500
    patience: int = 10
    batch_size: int = 32
    seed: int = 0
    single_root: bool = True
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float | None = 5.0
    max_updates: int = 100_000

    def __post_init__(self):
        for name in ("learning_rate", "arc_dim", "label_dim", "eval_every", "patience",
                     "batch_size", "max_updates", "eps"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("Adam betas must lie in [0, 1)")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ValueError("clip_norm must be positive or None")


def word_vectors(sentence: Sentence, vocab: SubwordVocab, provider: EmbeddingProvider) -> np.ndarray:
    """Pooled n x D representation of a sentence's words."""
    subwords, alignment = align(sentence, vocab)
    return pool_word_vectors(provider.embed(subwords, sentence.sent_id), alignment)


class EarlyStopping:
    """Stop after ``patience`` consecutive validations without a strict gain."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = -np.inf
        self.best_update: int | None = None
        self.stale = 0

    def step(self, value: float, update: int) -> bool:
        """Record a validation score; True if it is a new best."""
        if value > self.best:
            self.best = value
            self.best_update = update
            self.stale = 0
            return True
        self.stale += 1
        return False

    @property
    def should_stop(self) -> bool:
        return self.stale >= self.patience


class Adam:
    def __init__(self, params: BiaffineParams, config: TrainConfig):
        self.config = config
        self.m = params.zeros_like()
        self.v = params.zeros_like()
        self.t = 0

    def step(self, params: BiaffineParams, grads: BiaffineParams) -> None:
        c = self.config
        self.t += 1
        corr1 = 1.0 - c.beta1 ** self.t
        corr2 = 1.0 - c.beta2 ** self.t
        for name in params.names():
            g = getattr(grads, name)
            m = getattr(self.m, name)
            v = getattr(self.v, name)
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p = getattr(params, name)
            p -= c.learning_rate * (m / corr1) / (np.sqrt(v / corr2) + c.eps)


def clip_global_norm(grads: BiaffineParams, max_norm: float) -> float:
    total = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.as_dict().values())))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.as_dict().values():
            g *= scale
    return total


@dataclass
class Parser:
    params: BiaffineParams
    labels: list[str]
    single_root: bool = True

    def predict(self, X: np.ndarray) -> tuple[list[int], list[str]]:
        cache = scorer.encode(X, self.params)
        logp = mtt.local_normalize(scorer.arc_scores_from_cache(cache, self.params))
        heads = decoder.mst_decode(logp, self.single_root)
        label_table = scorer.gold_label_scores(cache, self.params, heads)
        ids = np.argmax(label_table, axis=1)
        return heads, [self.labels[i] for i in ids]

    def save(self, path, extra: dict | None = None) -> None:
        meta = {"single_root": self.single_root}
        meta.update(extra or {})
        scorer.save_checkpoint(path, self.params, self.labels, meta)

    @classmethod
    def load(cls, path) -> tuple["Parser", dict]:
        params, labels, extra = scorer.load_checkpoint(path)
        return cls(params, labels, bool(extra.get("single_root", True))), extra


def parse(parser: Parser, sentences: Sequence[Sentence], provider: EmbeddingProvider,
          vocab: SubwordVocab) -> list[Sentence]:
    """Fill HEAD and DEPREL of every sentence with the parser's prediction."""
    if provider.dim != parser.params.dim:
        raise ValueError(f"provider dimension {provider.dim} does not match "
                         f"checkpoint dimension {parser.params.dim}")
    out = []
    for sentence in sentences:
        heads, labels = parser.predict(word_vectors(sentence, vocab, provider))
        out.append(sentence.with_annotation(heads, labels))
    return out


@dataclass
class LogEntry:
    update: int
    train_loss: float
    dev_las: float | None = None


@dataclass
class TrainResult:
    parser: Parser
    log: list[LogEntry]
    best_las: float
    best_update: int | None
    last_update: int
    config: TrainConfig = field(repr=False, default=None)

    def log_tsv(self) -> str:
        header = "".join(f"# {line}\n" for line in dump_flat(self.config).splitlines())
        rows = ["update\ttrain_loss\tdev_LAS\n"]
        for e in self.log:
            las = "-" if e.dev_las is None else repr(e.dev_las)
            rows.append(f"{e.update}\t{e.train_loss!r}\t{las}\n")
        return header + "".join(rows)


@dataclass
class _Example:
    X: np.ndarray
    heads: list[int]
    label_ids: list[int]


def _prepare(sentences, vocab, provider, label_index, single_root, what):
    examples = []
    for s in sentences:
        problems = tree_violations(s.heads, single_root)
        if problems:
            raise ValueError(f"{what} sentence {s.sent_id!r}: " + "; ".join(problems))
        examples.append(_Example(word_vectors(s, vocab, provider), list(s.heads),
                                 [label_index.get(lab, -1) for lab in s.labels]))
    return examples


def dev_las(parser: Parser, dev_set: Sequence[Sentence], dev_vectors: Sequence[np.ndarray]) -> float:
    system = []
    for s, X in zip(dev_set, dev_vectors):
        heads, labels = parser.predict(X)
        system.append(s.with_annotation(heads, labels))
    return score(dev_set, system, mode="gold").las


def train(config: TrainConfig, train_set: Sequence[Sentence], dev_set: Sequence[Sentence],
          provider: EmbeddingProvider, vocab: SubwordVocab,
          evaluate: Callable[[Parser, int], float] | None = None) -> TrainResult:
    """Train a parser; returns the checkpoint with the best dev LAS.

    ``evaluate(parser, update)`` overrides dev scoring (used for scripted
    runs); by default dev LAS is computed on ``dev_set``.
    """
    if not train_set or not dev_set:
        raise ValueError("training and dev sets must be non-empty")
    labels = sorted({lab for s in train_set for lab in s.labels})
    label_index = {lab: i for i, lab in enumerate(labels)}
    # embeds every sentence up front, so provider gaps fail before any update
    train_examples = _prepare(train_set, vocab, provider, label_index, config.single_root, "train")
    dev_vectors = [word_vectors(s, vocab, provider) for s in dev_set]

    rng = np.random.default_rng(config.seed)
    params = scorer.init_params(provider.dim, len(labels), config.arc_dim, config.label_dim, rng)
    parser = Parser(params, labels, config.single_root)
    optimizer = Adam(params, config)
    stopper = EarlyStopping(config.patience)
    best_params = params.copy()
    history: list[LogEntry] = []

    if evaluate is None:
        def evaluate(p, update):
            return dev_las(p, dev_set, dev_vectors)

    update = 0
    done = False
    while not done:
        order = rng.permutation(len(train_examples))
        for start in range(0, len(order), config.batch_size):
            batch = [train_examples[i] for i in order[start:start + config.batch_size]]
            arc, lab, grads = mtt.batch_loss_and_grad(
                params, [(ex.X, ex.heads, ex.label_ids) for ex in batch], config.single_root)
            total_loss = arc + lab
            tokens = sum(len(ex.heads) for ex in batch)
            for g in grads.as_dict().values():
                g /= tokens
            if config.clip_norm is not None:
                clip_global_norm(grads, config.clip_norm)
            optimizer.step(params, grads)
            update += 1
            entry = LogEntry(update, total_loss / tokens)
            history.append(entry)
            if update % config.eval_every == 0:
                entry.dev_las = float(evaluate(parser, update))
                if stopper.step(entry.dev_las, update):
                    best_params = params.copy()
                log.info("update %d loss %.4f dev LAS %.2f", update, entry.train_loss,
                         entry.dev_las)
                if stopper.should_stop:
                    done = True
                    break
            if update >= config.max_updates:
                done = True
                break

    if stopper.best_update is None:
        history[-1].dev_las = float(evaluate(parser, update))
        stopper.step(history[-1].dev_las, update)
        best_params = params.copy()
    best = Parser(best_params, labels, config.single_root)
    return TrainResult(best, history, float(stopper.best), stopper.best_update, update, config)


def config_dict(config: TrainConfig) -> dict:
    return asdict(config)
