import numpy as np
import pytest

from segcrf.cli import UsageError, main, parse_config
from segcrf.synthetic import make_vocabulary, merge_single_char_words, sample_sentences


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    rng = np.random.default_rng(0)
    vocab = make_vocabulary(rng, size=40)
    sents = sample_sentences(rng, vocab, 50, max_words=6)
    (d / "train.txt").write_text("".join(" ".join(s) + "\n" for s in sents[:40]), encoding="utf-8")
    (d / "dev.txt").write_text("".join(" ".join(s) + "\n" for s in sents[40:]), encoding="utf-8")
    (d / "raw.txt").write_text("".join("".join(s) + "\n" for s in sents[40:]), encoding="utf-8")
    merged = [merge_single_char_words(s) for s in sents]
    (d / "other.txt").write_text("".join(" ".join(s) + "\n" for s in merged[:40]), encoding="utf-8")
    (d / "lex.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    return d


def write_config(d, name, **keys):
    base = {"train": "train.txt", "dev": "dev.txt", "iterations": "3", "output": name + ".model"}
    base.update(keys)
    p = d / (name + ".conf")
    p.write_text("# test config\n" + "".join(f"{k} = {v}\n" for k, v in base.items()),
                 encoding="utf-8")
    return p


@pytest.fixture(scope="module")
def baseline_model(corpus):
    assert main(["train", "--config", str(write_config(corpus, "base"))]) == 0
    return corpus / "base.model"


def test_train_writes_model_and_log(baseline_model):
    assert baseline_model.read_text(encoding="utf-8").startswith("SEGCRF 1\n")
    log = (baseline_model.parent / "base.model.log").read_text(encoding="utf-8")
    assert "iterations = 3" in log
    assert log.count("iteration iteration=") == 3


def test_train_is_byte_identical(corpus, baseline_model):
    cfg = write_config(corpus, "base2", output="base2.model")
    assert main(["train", "--config", str(cfg)]) == 0
    assert (corpus / "base2.model").read_bytes() == baseline_model.read_bytes()


def test_set_override(corpus):
    cfg = write_config(corpus, "over")
    assert main(["train", "--config", str(cfg), "--set", "iterations=1", "--set", "seed=5"]) == 0
    log = (corpus / "over.model.log").read_text(encoding="utf-8")
    assert "iterations = 1" in log and "seed = 5" in log


def test_unknown_key_is_a_usage_error(corpus, capsys):
    cfg = write_config(corpus, "bad", colour="blue")
    assert main(["train", "--config", str(cfg)]) == 1
    assert "colour" in capsys.readouterr().err
    with pytest.raises(UsageError):
        parse_config("a b\n")


def test_missing_config_and_bad_flags(corpus):
    assert main(["train", "--config", str(corpus / "nope.conf")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["tag", "--bogus"])
    assert exc.value.code == 1


def test_malformed_training_data_is_a_data_error(corpus):
    (corpus / "joint.txt").write_text("ab_NN c\n", encoding="utf-8")
    cfg = write_config(corpus, "joint", train="joint.txt", dev="", joint="true")
    assert main(["train", "--config", str(cfg)]) == 2


def test_tag_and_eval(corpus, baseline_model, capsys):
    out = corpus / "pred.txt"
    assert main(["tag", "--model", str(baseline_model), "--input", str(corpus / "raw.txt"),
                 "--output", str(out)]) == 0
    pred = out.read_text(encoding="utf-8").splitlines()
    raw = (corpus / "raw.txt").read_text(encoding="utf-8").splitlines()
    assert [line.replace(" ", "") for line in pred] == raw
    capsys.readouterr()
    assert main(["eval", str(corpus / "dev.txt"), str(corpus / "dev.txt")]) == 0
    assert "F 100.00" in capsys.readouterr().out
    assert main(["eval", str(corpus / "dev.txt"), str(corpus / "train.txt")]) == 2


def test_emit_tags_round_trip_through_ensemble(corpus, baseline_model):
    tags = corpus / "pred.tags"
    seg = corpus / "pred.seg"
    args = ["--model", str(baseline_model), "--input", str(corpus / "raw.txt")]
    assert main(["tag", *args, "--emit-tags", "--output", str(tags)]) == 0
    assert main(["tag", *args, "--output", str(seg)]) == 0
    merged = corpus / "merged.txt"
    assert main(["ensemble", str(tags), "--input-format", "tags", "--text", str(corpus / "raw.txt"),
                 "--output", str(merged)]) == 0
    assert merged.read_bytes() == seg.read_bytes()
    assert main(["ensemble", str(tags), "--input-format", "tags"]) == 1


def test_ensemble_vote_case(corpus):
    for k, line in enumerate(["ab", "ab", "ab", "a b"]):
        (corpus / f"v{k}.txt").write_text(line + "\n", encoding="utf-8")
    out = corpus / "vote.txt"
    inputs = [str(corpus / f"v{k}.txt") for k in range(4)]
    assert main(["ensemble", *inputs, "--output", str(out)]) == 0
    assert out.read_text(encoding="utf-8") == "ab\n"
    (corpus / "v4.txt").write_text("abc\n", encoding="utf-8")
    assert main(["ensemble", *inputs, str(corpus / "v4.txt")]) == 2


def test_lexicon_model_needs_lexicon(corpus, capsys):
    cfg = write_config(corpus, "lex", pipeline="lexicon", lexicon_path="lex.txt")
    assert main(["train", "--config", str(cfg)]) == 0
    model = corpus / "lex.model"
    assert main(["tag", "--model", str(model), "--input", str(corpus / "raw.txt"),
                 "--output", str(corpus / "lex.out")]) == 0
    moved = corpus / "moved.model"
    moved.write_bytes(model.read_bytes())
    (corpus / "lex.txt").rename(corpus / "lex.bak")
    try:
        assert main(["tag", "--model", str(moved), "--input", str(corpus / "raw.txt")]) == 2
        assert main(["tag", "--model", str(moved), "--input", str(corpus / "raw.txt"),
                     "--lexicon", str(corpus / "lex.bak"), "--output", str(corpus / "lex2.out")]) == 0
    finally:
        (corpus / "lex.bak").rename(corpus / "lex.txt")


def test_guide_model_needs_source(corpus, capsys):
    cfg = write_config(corpus, "guide", pipeline="guide", train="other.txt", dev="",
                       source_train="train.txt")
    assert main(["train", "--config", str(cfg)]) == 0
    model = corpus / "guide.model"
    source = corpus / "guide.model.source"
    assert source.exists()
    assert main(["tag", "--model", str(model), "--input", str(corpus / "raw.txt"),
                 "--output", str(corpus / "guide.out")]) == 0
    source.rename(corpus / "elsewhere.model")
    try:
        capsys.readouterr()
        assert main(["tag", "--model", str(model), "--input", str(corpus / "raw.txt")]) == 2
        assert "source model" in capsys.readouterr().err
        assert main(["tag", "--model", str(model), "--input", str(corpus / "raw.txt"),
                     "--source-model", str(corpus / "elsewhere.model"),
                     "--output", str(corpus / "guide2.out")]) == 0
    finally:
        (corpus / "elsewhere.model").rename(source)
    assert (corpus / "guide2.out").read_bytes() == (corpus / "guide.out").read_bytes()


def test_coupled_train_tag_convert(corpus, baseline_model):
    cfg = write_config(corpus, "coupled", pipeline="coupled", train="other.txt", dev="",
                       source_train="train.txt", sample_count="40")
    assert main(["train", "--config", str(cfg)]) == 0
    model = corpus / "coupled.model"
    for side in ("A", "B"):
        assert main(["tag", "--model", str(model), "--input", str(corpus / "raw.txt"), "--side", side,
                     "--output", str(corpus / f"coupled.{side}")]) == 0
    out, report = corpus / "converted.txt", corpus / "convert.report"
    assert main(["convert", "--model", str(model), "--input", str(corpus / "train.txt"),
                 "--output", str(out), "--report", str(report), "--threshold", "0"]) == 0
    assert report.read_text(encoding="utf-8").startswith("kept\t40\ndropped\t0\n")
    assert len(out.read_text(encoding="utf-8").splitlines()) == 40
    assert main(["convert", "--model", str(baseline_model),
                 "--input", str(corpus / "train.txt")]) == 2
