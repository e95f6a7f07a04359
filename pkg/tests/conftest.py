from pathlib import Path

import numpy as np
import pytest

from udtransfer import kernels
from udtransfer.subword import SubwordVocab
from udtransfer.treebank import Sentence, Token, attach_char_spans

DATA = Path(__file__).parent / "data"


@pytest.fixture
def ud_text():
    return (DATA / "ud_fixtures.conllu").read_text(encoding="utf-8")


@pytest.fixture
def toy_vocab():
    return SubwordVocab.from_pieces(["un", "##aff", "##able", "the", "[UNK]"])


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    """Each available kernel implementation in turn."""
    return kernels.BACKENDS[request.param]


def make_sentence(forms, heads, labels=None, sent_id="s", raw_text=None):
    labels = labels or ["dep" if h else "root" for h in heads]
    tokens = tuple(Token(index=i + 1, form=f, gold_head=h, gold_label=lab)
                   for i, (f, h, lab) in enumerate(zip(forms, heads, labels)))
    s = Sentence(tokens=tokens, sent_id=sent_id,
                 raw_text=" ".join(forms) if raw_text is None else raw_text)
    return attach_char_spans(s)


def random_scores(rng, n, scale=2.0):
    S = rng.normal(size=(n + 1, n)) * scale
    S[np.arange(n) + 1, np.arange(n)] = -np.inf
    return S


def small_params(rng, dim=4, num_labels=3, arc_dim=6, label_dim=5):
    """Scorer parameters with every tensor random, so no gradient is trivially zero."""
    from udtransfer.scorer import init_params

    p = init_params(dim, num_labels, arc_dim, label_dim, rng)
    for name, value in p.as_dict().items():
        value[...] = rng.normal(scale=0.7, size=value.shape)
    return p


def numeric_gradient(f, array, step=1e-6):
    """Central differences of scalar ``f()`` w.r.t. every entry of ``array`` (edited in place)."""
    grad = np.zeros_like(array)
    it = np.nditer(array, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = array[idx]
        array[idx] = old + step
        up = f()
        array[idx] = old - step
        down = f()
        array[idx] = old
        grad[idx] = (up - down) / (2 * step)
    return grad


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
