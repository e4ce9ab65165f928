import pytest
from hypothesis import given
from hypothesis import strategies as st

from segcrf.corpus import SpanSegmentation
from segcrf.evaluation import PRF, char_accuracy, score_files, score_segmentations, sentence_prf, word_prf


def seg(*spans, labels=None):
    return SpanSegmentation(tuple(spans), labels)


def test_hand_counted_case():
    prf = word_prf([seg((0, 1), (1, 3))], [seg((0, 1), (1, 2), (2, 3))])
    assert prf.precision == pytest.approx(1 / 3)
    assert prf.recall == pytest.approx(1 / 2)
    assert prf.f1 == pytest.approx(0.4)


def test_no_match():
    assert tuple(word_prf([seg((0, 2))], [seg((0, 1), (1, 2))])) == (0.0, 0.0, 0.0)


def test_perfect():
    s = seg((0, 2), (2, 3))
    assert tuple(word_prf([s], [s])) == (1.0, 1.0, 1.0)


def test_char_accuracy():
    assert char_accuracy([list("BIES")], [list("BIES")]) == 1.0
    assert char_accuracy([list("BIES")], [list("SEIB")]) == 0.0
    assert char_accuracy([list("BIES")], [list("BIEB")]) == 0.75
    with pytest.raises(ValueError):
        char_accuracy([list("BE")], [list("S")])


def test_labeled_mode():
    g = seg((0, 1), (1, 3), labels=("NN", "VV"))
    p = seg((0, 1), (1, 3), labels=("NN", "NN"))
    assert sentence_prf(g, p).f1 == 1.0
    assert sentence_prf(g, p, labeled=True) == PRF(2, 2, 1)


def test_length_mismatch():
    with pytest.raises(ValueError):
        sentence_prf(seg((0, 1)), seg((0, 2)))


def segmentations(n):
    def build(flags):
        cuts = [k for k, f in enumerate(flags, 1) if f]
        return SpanSegmentation.from_words(["x" * (b - a) for a, b in zip([0] + cuts, cuts + [n])])

    return st.lists(st.booleans(), min_size=n - 1, max_size=n - 1).map(build)


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(segmentations(n), segmentations(n))))
def test_swap_symmetry_and_bounds(pair):
    g, p = pair
    a, b = word_prf([g], [p]), word_prf([p], [g])
    assert a.precision == b.recall and a.recall == b.precision and a.f1 == pytest.approx(b.f1)
    for v in a:
        assert 0.0 <= v <= 1.0
    if a.precision > 0 and a.recall > 0:
        assert min(a.precision, a.recall) - 1e-12 <= a.f1 <= max(a.precision, a.recall) + 1e-12


def test_score_segmentations_and_report():
    rep = score_segmentations([(["ab", "c"], None)], [(["a", "b", "c"], None)])
    assert rep.prf == PRF(2, 3, 1)
    text = rep.format()
    assert "F 40.00" in text
    assert text.splitlines()[-1].startswith("#score acc=")


def test_score_files(tmp_path):
    gold = tmp_path / "g.txt"
    pred = tmp_path / "p.txt"
    gold.write_text("ab c\nde\n", encoding="utf-8")
    pred.write_text("ab c\nd e\n", encoding="utf-8")
    rep = score_files(gold, pred)
    assert rep.prf == PRF(3, 4, 2)
    pred.write_text("ab c\nxy\n", encoding="utf-8")
    with pytest.raises(ValueError):
        score_files(gold, pred)
