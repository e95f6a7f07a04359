import json
import subprocess
import sys

import pytest

from udtransfer.cli import main
from udtransfer.subword import save_vocab
from udtransfer.synthetic import make_treebank, make_vocab
from udtransfer.treebank import is_tree, parse_conllu, save_conllu, write_conllu


@pytest.fixture
def toy_files(tmp_path):
    save_conllu(tmp_path / "train.conllu", make_treebank(12, seed=1))
    save_conllu(tmp_path / "dev.conllu", make_treebank(4, seed=2))
    save_vocab(tmp_path / "vocab.txt", make_vocab())
    return tmp_path


def test_evaluate_identity(toy_files, capsys):
    gold = str(toy_files / "dev.conllu")
    assert main(["evaluate", gold, gold, "--mode", "gold"]) == 0
    assert capsys.readouterr().out.splitlines()[0] == "LAS\t100.00"
    assert main(["evaluate", gold, gold, "--mode", "raw", "--json"]) == 0
    assert json.loads(capsys.readouterr().out)["uas_f1"] == 100.0


def test_unknown_subcommand(capsys):
    assert main(["frobnicate"]) == 1
    assert "usage" in capsys.readouterr().err


def test_no_subcommand(capsys):
    assert main([]) == 1


def test_bad_mode_is_usage_error(toy_files):
    gold = str(toy_files / "dev.conllu")
    assert main(["evaluate", gold, gold, "--mode", "fuzzy"]) == 1


def test_data_errors_exit_2(toy_files, capsys):
    bad = toy_files / "bad.conllu"
    bad.write_text("1\tx\t_\t_\t_\t_\tQ\tdep\t_\t_\n")
    assert main(["evaluate", str(bad), str(bad)]) == 2
    assert "line 1" in capsys.readouterr().err
    assert main(["evaluate", str(toy_files / "missing"), str(bad)]) == 2


def test_train_then_parse(toy_files, capsys):
    config = toy_files / "train.cfg"
    config.write_text("train_file=train.conllu\ndev_file=dev.conllu\nvocab=vocab.txt\n"
                      "checkpoint=model.npz\nlog=train.log\nembedding_dim=16\n"
                      "learning_rate=0.001\narc_dim=8\nlabel_dim=4\neval_every=2\n"
                      "patience=2\nmax_updates=6\nbatch_size=4\n")
    assert main(["train", str(config), "--seed", "3", "--multi-root"]) == 0
    assert (toy_files / "model.npz").exists()
    cfg_text = (toy_files / "model.npz.config").read_text()
    assert "seed=3" in cfg_text and "single_root=False" in cfg_text
    log_text = (toy_files / "train.log").read_text()
    assert log_text.startswith("# ")

    out = toy_files / "pred.conllu"
    assert main(["parse", str(toy_files / "model.npz"), str(toy_files / "dev.conllu"),
                 "--vocab", str(toy_files / "vocab.txt"), "-o", str(out)]) == 0
    parsed = parse_conllu(out.read_text())
    assert len(parsed) == 4
    assert all(is_tree(s.heads, single_root=False) for s in parsed)

    raw = toy_files / "raw.txt"
    raw.write_text("ba da ke\n\nmo\n")
    assert main(["--threads", "2", "parse", str(toy_files / "model.npz"), str(raw),
                 "--vocab", str(toy_files / "vocab.txt"), "--input-format", "raw"]) == 0
    parsed = parse_conllu(capsys.readouterr().out)
    assert [s.forms for s in parsed] == [["ba", "da", "ke"], ["mo"]]


def test_train_missing_key(toy_files):
    config = toy_files / "bad.cfg"
    config.write_text("train_file=train.conllu\n")
    assert main(["train", str(config)]) == 2


def test_mix_twice_is_byte_identical(toy_files, capsys):
    spec = toy_files / "mix.spec"
    spec.write_text("seed=4\nsource.aa=train.conllu\nbudget.aa=20\n"
                    "source.bb=dev.conllu\nbudget.bb=5\n")
    outs = []
    for k in range(2):
        path = toy_files / f"mix{k}.conllu"
        assert main(["mix", str(spec), "-o", str(path)]) == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert "aa\t" in capsys.readouterr().err


def test_analyze(toy_files):
    features = toy_files / "dist.txt"
    features.write_text("DIST v1\nxx aa 0.2\nxx bb 0.4\n")
    out = toy_files / "report.tsv"
    plot = toy_files / "plot.tsv"
    dev = str(toy_files / "dev.conllu")
    code = main(["analyze", "--vocab", str(toy_files / "vocab.txt"),
                 "--train", str(toy_files / "train.conllu"), "--test", f"xx={dev}",
                 "--system", f"xx={dev}", "--features", str(features),
                 "--train-langs", "aa,bb", "--related", "xx", "-o", str(out),
                 "--plot-data", str(plot)])
    assert code == 0
    header, row = out.read_text().splitlines()
    fields = dict(zip(header.split("\t"), row.split("\t")))
    assert float(fields["LAS"]) == 100.0
    assert float(fields["sigma_bar"]) == pytest.approx(0.7)
    assert fields["related"] == "1"
    assert plot.read_text().startswith("lang\tmetric\tvalue")


def test_analyze_needs_las(toy_files):
    dev = str(toy_files / "dev.conllu")
    assert main(["analyze", "--vocab", str(toy_files / "vocab.txt"),
                 "--train", dev, "--test", f"xx={dev}"]) == 1


@pytest.mark.parametrize("check", ["partition", "marginals", "decode"])
def test_oracle(check, capsys):
    assert main(["oracle", check, "--n", "4", "--trials", "20", "--seed", "1"]) == 0
    assert capsys.readouterr().out.startswith(check)


def test_oracle_size_limit():
    assert main(["oracle", "decode", "--n", "12"]) == 1


def test_module_entry_point(toy_files):
    gold = str(toy_files / "dev.conllu")
    proc = subprocess.run([sys.executable, "-m", "udtransfer", "evaluate", gold, gold],
                          capture_output=True, text=True)
    assert proc.returncode == 0
    assert proc.stdout.startswith("LAS\t100.00")


def test_written_treebank_round_trips(toy_files):
    text = (toy_files / "train.conllu").read_text()
    assert write_conllu(parse_conllu(text)) == text
