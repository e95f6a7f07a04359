import numpy as np
import pytest

from udtransfer.embeddings import (
    EmbeddingError,
    EmbeddingProvider,
    load_embedding_file,
    write_embedding_file,
)
from udtransfer.scorer import init_params
from udtransfer.synthetic import make_treebank, make_vocab
from udtransfer.trainer import (
    Adam,
    EarlyStopping,
    Parser,
    TrainConfig,
    clip_global_norm,
    parse,
    train,
)
from udtransfer.treebank import is_tree

from .conftest import make_sentence

VOCAB = make_vocab()
PROVIDER = EmbeddingProvider(dim=16, seed=1)


def small_config(**overrides):
    values = dict(learning_rate=1e-3, arc_dim=8, label_dim=4, eval_every=1, patience=10,
                  batch_size=4, seed=0)
    values.update(overrides)
    return TrainConfig(**values)


def test_config_defaults_and_validation():
    c = TrainConfig()
    assert (c.learning_rate, c.arc_dim, c.label_dim, c.eval_every, c.patience) == \
        (5e-6, 400, 100, 500, 10)
    assert (c.beta1, c.beta2, c.eps, c.single_root) == (0.9, 0.999, 1e-8, True)
    with pytest.raises(ValueError):
        TrainConfig(patience=0)
    with pytest.raises(ValueError):
        TrainConfig(beta1=1.0)


def test_early_stopping_rule():
    stopper = EarlyStopping(10)
    sequence = [50, 60] + [59] * 10
    for k, value in enumerate(sequence, start=1):
        assert not stopper.should_stop
        stopper.step(value, k)
    assert stopper.should_stop
    assert stopper.best == 60 and stopper.best_update == 2


def test_scripted_run_stops_at_boundary_and_returns_best():
    data = make_treebank(8, seed=2)
    script = [50.0, 60.0] + [59.0] * 10 + [99.0]
    snapshots = {}

    def evaluate(parser, update):
        snapshots[update] = parser.params.copy()
        return script[update - 1]

    result = train(small_config(), data, data, PROVIDER, VOCAB, evaluate=evaluate)
    assert result.last_update == 12
    assert result.best_update == 2 and result.best_las == 60.0
    assert [e.dev_las for e in result.log] == script[:12]
    for name in result.parser.params.names():
        assert np.array_equal(getattr(result.parser.params, name), getattr(snapshots[2], name))
    assert result.last_update <= result.best_update + 10 * 1


def test_equal_score_is_not_an_improvement():
    data = make_treebank(4, seed=2)
    result = train(small_config(patience=3), data, data, PROVIDER, VOCAB,
                   evaluate=lambda p, u: 70.0)
    assert result.best_update == 1 and result.last_update == 4


def test_deterministic_under_seed():
    data = make_treebank(10, seed=4)
    runs = [train(small_config(eval_every=3, max_updates=9), data, data, PROVIDER, VOCAB)
            for _ in range(2)]
    assert runs[0].log_tsv() == runs[1].log_tsv()
    for name in runs[0].parser.params.names():
        assert np.array_equal(getattr(runs[0].parser.params, name),
                              getattr(runs[1].parser.params, name))
    other = train(small_config(eval_every=3, max_updates=9, seed=1), data, data, PROVIDER, VOCAB)
    assert other.log_tsv() != runs[0].log_tsv()


def test_fixed_batch_loss_decreases():
    data = make_treebank(6, seed=5)
    result = train(small_config(batch_size=6, eval_every=100, max_updates=10), data, data,
                   PROVIDER, VOCAB)
    losses = [e.train_loss for e in result.log]
    assert len(losses) == 10
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_provider_gap_fails_before_training(tmp_path):
    data = make_treebank(3, seed=6)
    path = tmp_path / "emb.txt"
    write_embedding_file(path, {"syn-1": np.zeros((8, 4))})
    calls = []
    with pytest.raises(EmbeddingError):
        train(small_config(), data, data, load_embedding_file(path), VOCAB,
              evaluate=lambda p, u: calls.append(u) or 0.0)
    assert calls == []


def test_invalid_gold_tree_rejected():
    bad = [make_sentence(["ba", "da"], [2, 1])]
    with pytest.raises(ValueError, match="train sentence"):
        train(small_config(), bad, bad, PROVIDER, VOCAB)


def test_log_header_lists_config():
    data = make_treebank(4, seed=7)
    result = train(small_config(max_updates=2, eval_every=2), data, data, PROVIDER, VOCAB)
    text = result.log_tsv()
    assert "# learning_rate=0.001" in text
    assert "update\ttrain_loss\tdev_LAS" in text
    rows = [ln for ln in text.splitlines() if not ln.startswith("#")][1:]
    assert rows[0].endswith("\t-")


def test_adam_first_step_matches_hand_computation():
    rng = np.random.default_rng(0)
    params = init_params(3, 2, arc_dim=2, label_dim=2, rng=rng)
    grads = params.zeros_like()
    grads.root[...] = [0.5, -2.0, 0.0]
    before = params.root.copy()
    config = TrainConfig(learning_rate=0.1)
    Adam(params, config).step(params, grads)
    m = 0.1 * grads.root / (1 - 0.9)
    v = 0.001 * grads.root ** 2 / (1 - 0.999)
    np.testing.assert_allclose(params.root, before - 0.1 * m / (np.sqrt(v) + 1e-8), atol=1e-15)


def test_clip_global_norm():
    params = init_params(3, 2, arc_dim=2, label_dim=2)
    grads = params.zeros_like()
    grads.root[...] = [3.0, 4.0, 0.0]
    assert clip_global_norm(grads, 5.0) == 5.0
    assert np.allclose(grads.root, [3.0, 4.0, 0.0])
    clip_global_norm(grads, 1.0)
    assert np.linalg.norm(grads.root) == pytest.approx(1.0)


def test_parse_outputs_valid_trees(tmp_path):
    params = init_params(16, 2, arc_dim=8, label_dim=4, rng=np.random.default_rng(3))
    parser = Parser(params, ["nsubj", "root"], single_root=True)
    data = make_treebank(5, seed=8) + [make_sentence(["ba"], [0], sent_id="one")]
    out = parse(parser, data, PROVIDER, VOCAB)
    for s, o in zip(data, out):
        assert is_tree(o.heads, True)
        assert o.forms == s.forms
    assert out[-1].heads == [0]

    path = tmp_path / "m.npz"
    parser.save(path)
    loaded, _ = Parser.load(path)
    assert parse(loaded, data, PROVIDER, VOCAB) == out

    with pytest.raises(ValueError, match="dimension"):
        parse(parser, data, EmbeddingProvider(dim=8), VOCAB)
