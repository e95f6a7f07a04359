"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis, decoder, evaluation, mtt, oracle, trainer
from .embeddings import DEFAULT_DIM, EmbeddingError, EmbeddingProvider, load_embedding_file
from .flatconf import ConfigError, dump_flat, read_flat, to_dataclass
from .subword import load_vocab
from .treebank import ConlluError, Sentence, Token, attach_char_spans, read_conllu, write_conllu

log = logging.getLogger("udtransfer")

DATA_ERRORS = (ConlluError, ConfigError, EmbeddingError, OSError, ValueError, KeyError,
               ArithmeticError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _add_root_flags(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--single-root", dest="single_root", action="store_true", default=None,
                   help="exactly one word attaches to ROOT (default)")
    g.add_argument("--multi-root", dest="single_root", action="store_false",
                   help="allow several ROOT children")


def _provider(args, extra: dict | None = None) -> EmbeddingProvider:
    if getattr(args, "embeddings", None):
        return load_embedding_file(args.embeddings)
    extra = extra or {}
    dim = args.embedding_dim or extra.get("embedding_dim", DEFAULT_DIM)
    seed = args.embedding_seed if args.embedding_seed is not None else extra.get("embedding_seed", 0)
    return EmbeddingProvider("pseudo", dim=int(dim), seed=int(seed))


def _add_embedding_flags(p):
    p.add_argument("--embeddings", help="EMB v1 table; default is the pseudo-random backend")
    p.add_argument("--embedding-dim", type=int, default=None,
                   help=f"pseudo backend dimension (default {DEFAULT_DIM})")
    p.add_argument("--embedding-seed", type=int, default=None, help="pseudo backend seed")


def read_raw_text(path) -> list[Sentence]:
    """One sentence per non-empty line, tokens split on whitespace."""
    sentences = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            text = line.rstrip("\n")
            forms = text.split()
            if not forms:
                continue
            tokens = tuple(Token(index=i + 1, form=w) for i, w in enumerate(forms))
            sentences.append(attach_char_spans(
                Sentence(tokens=tokens, sent_id=f"s{len(sentences) + 1}", raw_text=text)))
    return sentences


def _write_output(text: str, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as f:
            f.write(text)


def cmd_train(args) -> int:
    values = read_flat(args.config)
    base = os.path.dirname(os.path.abspath(args.config))

    def path_of(key, required=True):
        if key not in values:
            if required:
                raise ConfigError(f"config is missing {key!r}")
            return None
        p = values.pop(key)
        return p if os.path.isabs(p) else os.path.join(base, p)

    train_path = path_of("train_file")
    dev_path = path_of("dev_file")
    vocab_path = path_of("vocab")
    emb_path = path_of("embeddings", required=False)
    checkpoint = path_of("checkpoint")
    log_path = path_of("log", required=False)
    emb_dim = int(values.pop("embedding_dim", DEFAULT_DIM))
    emb_seed = int(values.pop("embedding_seed", 0))
    if args.seed is not None:
        values["seed"] = str(args.seed)
    if args.single_root is not None:
        values["single_root"] = str(args.single_root)
    config = to_dataclass(trainer.TrainConfig, values)

    provider = (load_embedding_file(emb_path) if emb_path
                else EmbeddingProvider("pseudo", dim=emb_dim, seed=emb_seed))
    vocab = load_vocab(vocab_path)
    result = trainer.train(config, read_conllu(train_path), read_conllu(dev_path), provider, vocab)
    extra = {"config": dump_flat(config)}
    if provider.backend == "pseudo":
        extra.update(embedding_dim=provider.dim, embedding_seed=provider.seed)
    result.parser.save(checkpoint, extra)
    with open(checkpoint + ".config", "w", encoding="utf-8") as f:
        f.write(dump_flat(config))
    log_text = result.log_tsv()
    if log_path:
        with open(log_path, "w", encoding="utf-8") as f:
            f.write(log_text)
    print(f"best dev LAS {result.best_las:.2f} at update {result.best_update}; "
          f"stopped at update {result.last_update}", file=sys.stderr)
    return 0


def cmd_parse(args) -> int:
    parser, extra = trainer.Parser.load(args.checkpoint)
    if args.single_root is not None:
        parser.single_root = args.single_root
    provider = _provider(args, extra)
    vocab = load_vocab(args.vocab)
    if args.input_format == "raw":
        sentences = read_raw_text(args.input)
    else:
        sentences = read_conllu(args.input)
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            parsed = list(pool.map(lambda s: trainer.parse(parser, [s], provider, vocab)[0],
                                   sentences))
    else:
        parsed = trainer.parse(parser, sentences, provider, vocab)
    _write_output(write_conllu(parsed), args.output)
    return 0


def cmd_evaluate(args) -> int:
    gold = read_conllu(args.gold)
    system = read_conllu(args.system)
    metrics = evaluation.score(gold, system, mode=args.mode)
    _write_output(metrics.to_json() + "\n" if args.json else metrics.to_tsv(), args.output)
    return 0


def _pairs(items, what):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--{what} expects LANG=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k] = v
    return out


def cmd_analyze(args) -> int:
    vocab = load_vocab(args.vocab)
    train_corpus = [s for p in args.train for s in read_conllu(p)]
    tests = _pairs(args.test, "test")
    systems = _pairs(args.system, "system")
    las_values = _pairs(args.las, "las")
    typology = analysis.load_typology(args.features) if args.features else None
    train_langs = [x for x in (args.train_langs or "").split(",") if x]
    if typology is not None and not train_langs:
        raise UsageError("--train-langs is required with --features")
    related = set((args.related or "").split(",")) - {""}
    records = []
    for lang, path in tests.items():
        gold = read_conllu(path)
        if lang in systems:
            las = evaluation.score(gold, read_conllu(systems[lang]), mode=args.mode).las
        elif lang in las_values:
            las = float(las_values[lang])
        else:
            raise UsageError(f"no --system or --las given for {lang}")
        records.append(analysis.transfer_record(lang, las, train_corpus, gold, vocab, typology,
                                                train_langs, lang in related))
    wide, long = analysis.emit_report(records)
    _write_output(wide, args.output)
    if args.plot_data:
        _write_output(long, args.plot_data)
    return 0


def cmd_mix(args) -> int:
    with open(args.spec, encoding="utf-8") as f:
        spec = analysis.parse_mix_spec(f.read(), base_dir=os.path.dirname(os.path.abspath(args.spec)))
    if args.seed is not None:
        spec.seed = args.seed
    corpus, realized = analysis.mix_treebanks(spec)
    _write_output(write_conllu(corpus), args.output)
    for lang, count in realized.items():
        print(f"{lang}\t{count}", file=sys.stderr)
    return 0


def _random_logp(rng, n):
    S = rng.normal(size=(n + 1, n)) * 2.0
    S[np.arange(n) + 1, np.arange(n)] = -np.inf
    return mtt.local_normalize(S)


def cmd_oracle(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    single_root = True if args.single_root is None else args.single_root
    worst = 0.0
    for _ in range(args.trials):
        n = int(rng.integers(1, args.n + 1))
        logp = _random_logp(rng, n)
        if args.check == "partition":
            det = mtt.log_partition(logp, single_root)
            brute = oracle.brute_force_log_partition(logp, single_root)
            worst = max(worst, abs(det - brute) / max(1.0, abs(brute)))
        elif args.check == "marginals":
            mu = mtt.arc_marginals(logp, single_root)
            worst = max(worst, float(np.abs(mu - oracle.brute_force_marginals(logp, single_root)).max()))
        else:
            got = decoder.decode_score(logp, decoder.mst_decode(logp, single_root))
            want = decoder.decode_score(logp, decoder.brute_force_best_tree(logp, single_root))
            worst = max(worst, abs(got - want))
    print(f"{args.check}\ttrials={args.trials}\tmax_n={args.n}\tmax_error={worst:.3e}")
    return 0 if worst <= args.tolerance else 2


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="udtransfer", description=__doc__.strip().splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    p.add_argument("--threads", type=int, default=1, help="worker cap for parallel steps")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    t = sub.add_parser("train", help="train a parser from a key=value config file")
    t.add_argument("config")
    t.add_argument("--seed", type=int)
    _add_root_flags(t)
    t.set_defaults(func=cmd_train)

    q = sub.add_parser("parse", help="parse CoNLL-U or raw text with a checkpoint")
    q.add_argument("checkpoint")
    q.add_argument("input")
    q.add_argument("--vocab", required=True)
    q.add_argument("--input-format", choices=("conllu", "raw"), default="conllu")
    q.add_argument("-o", "--output")
    _add_embedding_flags(q)
    _add_root_flags(q)
    q.set_defaults(func=cmd_parse)

    e = sub.add_parser("evaluate", help="LAS/UAS of a system file against gold")
    e.add_argument("gold")
    e.add_argument("system")
    e.add_argument("--mode", choices=("gold", "raw"), default="gold")
    e.add_argument("--json", action="store_true")
    e.add_argument("-o", "--output")
    e.set_defaults(func=cmd_evaluate)

    a = sub.add_parser("analyze", help="vocabulary overlap / segmentation / typology report")
    a.add_argument("--vocab", required=True)
    a.add_argument("--train", nargs="+", required=True, help="parser training CoNLL-U files")
    a.add_argument("--test", action="append", required=True, metavar="LANG=GOLD")
    a.add_argument("--system", action="append", metavar="LANG=SYSTEM")
    a.add_argument("--las", action="append", metavar="LANG=VALUE")
    a.add_argument("--mode", choices=("gold", "raw"), default="gold")
    a.add_argument("--features", help="LANGFEAT v1 or DIST v1 file")
    a.add_argument("--train-langs", help="comma-separated training languages")
    a.add_argument("--related", help="comma-separated test languages with a relative in training")
    a.add_argument("-o", "--output")
    a.add_argument("--plot-data", help="write the long-format table here")
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("mix", help="build a training mix from a key=value spec")
    m.add_argument("spec")
    m.add_argument("--seed", type=int)
    m.add_argument("-o", "--output")
    m.set_defaults(func=cmd_mix)

    o = sub.add_parser("oracle", help="cross-check against brute-force enumeration")
    o.add_argument("check", choices=("partition", "marginals", "decode"))
    o.add_argument("--n", type=int, default=5)
    o.add_argument("--trials", type=int, default=100)
    o.add_argument("--seed", type=int)
    o.add_argument("--tolerance", type=float, default=1e-8)
    _add_root_flags(o)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        if getattr(args, "n", 1) > oracle.MAX_ENUMERATION_N:
            raise UsageError(f"--n is limited to {oracle.MAX_ENUMERATION_N}")
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except DATA_ERRORS as exc:
        print(f"udtransfer: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
