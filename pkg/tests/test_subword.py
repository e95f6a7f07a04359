import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from udtransfer.subword import (
    SubwordAlignment,
    SubwordVocab,
    align,
    load_vocab,
    pool_word_vectors,
    save_vocab,
    tokenize_words,
    wordpiece_tokenize,
)

from .conftest import make_sentence


def test_greedy_longest_match(toy_vocab):
    assert wordpiece_tokenize("unaffable", toy_vocab) == ["un", "##aff", "##able"]
    assert wordpiece_tokenize("the", toy_vocab) == ["the"]
    assert wordpiece_tokenize("xyz", toy_vocab) == ["[UNK]"]


def test_partial_match_falls_back_to_unk(toy_vocab):
    # "un" matches but nothing continues "xx"
    assert wordpiece_tokenize("unxx", toy_vocab) == ["[UNK]"]


def test_longest_piece_wins():
    vocab = SubwordVocab.from_pieces(["a", "ab", "abc", "##c", "##bc", "[UNK]"])
    assert wordpiece_tokenize("abc", vocab) == ["abc"]
    assert wordpiece_tokenize("abcbc", vocab) == ["abc", "##bc"]


def test_no_lowercasing():
    vocab = SubwordVocab.from_pieces(["the", "[UNK]"])
    assert wordpiece_tokenize("The", vocab) == ["[UNK]"]


def test_overlong_word_is_unk():
    vocab = SubwordVocab.from_pieces(["a", "##a", "[UNK]"])
    assert wordpiece_tokenize("a" * 200, vocab) == ["a"] + ["##a"] * 199
    assert wordpiece_tokenize("a" * 201, vocab) == ["[UNK]"]


def test_empty_word_rejected(toy_vocab):
    with pytest.raises(ValueError):
        wordpiece_tokenize("", toy_vocab)


def test_vocab_requires_unk():
    with pytest.raises(ValueError):
        SubwordVocab(("a", "b"))


def test_vocab_file_round_trip(tmp_path, toy_vocab):
    path = tmp_path / "vocab.txt"
    save_vocab(path, toy_vocab)
    loaded = load_vocab(path)
    assert loaded.pieces == toy_vocab.pieces
    assert loaded.id_of("##aff") == 1
    assert loaded.id_of("nope") == loaded.id_of("[UNK]")


def test_align_examples(toy_vocab):
    subwords, al = align(make_sentence(["the", "unaffable"], [0, 1]), toy_vocab)
    assert subwords == ["the", "un", "##aff", "##able"]
    assert al.ranges == ((0, 1), (1, 4))
    _, al = align(make_sentence(["the", "the"], [0, 1]), toy_vocab)
    assert al.ranges == ((0, 1), (1, 2))
    _, al = align(make_sentence(["unaffable"], [0]), toy_vocab)
    assert al.ranges == ((0, 3),)


def test_alignment_must_be_contiguous():
    with pytest.raises(ValueError):
        SubwordAlignment(((0, 1), (2, 3)))
    with pytest.raises(ValueError):
        SubwordAlignment(((0, 0),))


def test_pool_singleton_and_mean():
    v = np.array([[1.5, -2.0]])
    assert np.array_equal(pool_word_vectors(v, SubwordAlignment(((0, 1),))), v)
    pooled = pool_word_vectors(np.array([[1.0], [3.0]]), SubwordAlignment(((0, 2),)))
    assert pooled[0, 0] == 2.0


def test_pool_matches_brute_force():
    rng = np.random.default_rng(5)
    E = rng.normal(size=(5, 3))
    al = SubwordAlignment.from_lengths([2, 1, 2])
    expected = np.array([[sum(E[j, d] for j in range(a, b)) / (b - a) for d in range(3)]
                         for a, b in al.ranges])
    np.testing.assert_allclose(pool_word_vectors(E, al), expected, rtol=0, atol=1e-15)


def test_pool_dimension_mismatch():
    with pytest.raises(ValueError):
        pool_word_vectors(np.zeros((3, 2)), SubwordAlignment.from_lengths([1, 1]))


words = st.lists(st.text(alphabet="unaffblethxyz", min_size=1, max_size=10), min_size=1, max_size=8)


@settings(max_examples=200, deadline=None)
@given(words)
def test_concatenation_law_and_length(ws):
    vocab = SubwordVocab.from_pieces(["un", "##aff", "##able", "the", "a", "##e", "##x", "[UNK]"])
    subwords, al = tokenize_words(ws, vocab)
    assert subwords == [p for w in ws for p in wordpiece_tokenize(w, vocab)]
    assert al.num_subwords == len(subwords) >= len(ws)
    assert [b - a for a, b in al.ranges] == [len(wordpiece_tokenize(w, vocab)) for w in ws]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=6), st.randoms(use_true_random=False))
def test_pool_permutation_equivariance(lengths, rnd):
    rng = np.random.default_rng(rnd.randint(0, 2**31))
    E = rng.normal(size=(sum(lengths), 3))
    al = SubwordAlignment.from_lengths(lengths)
    pooled = pool_word_vectors(E, al)
    perm = list(range(len(lengths)))
    rnd.shuffle(perm)
    blocks = [E[al.ranges[i][0]:al.ranges[i][1]] for i in perm]
    permuted = pool_word_vectors(np.vstack(blocks), SubwordAlignment.from_lengths(
        [lengths[i] for i in perm]))
    np.testing.assert_allclose(permuted, pooled[perm], atol=1e-15)
