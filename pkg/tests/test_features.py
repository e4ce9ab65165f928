import numpy as np
import pytest

from segcrf.corpus import LabeledSentence, TagScheme
from segcrf.crf import CrfModel, build_lattice
from segcrf.features import (
    END_TAG,
    START_TAG,
    FeatureIndex,
    TemplateConfig,
    build_index,
    extract_baseline,
    extract_guide,
    extract_lexicon,
    identity_view,
    observations,
)
from segcrf.lexicon import Lexicon

BIES = TagScheme.bies()


def template_of(feature):
    return feature.split("|")[0][:2] if feature[0].isdigit() else feature[:3]


def test_baseline_count_and_breakdown():
    feats = extract_baseline("中华人民共和国", 4, "B", "I")
    assert len(feats) == 26
    counts = {}
    for f in feats:
        counts[template_of(f)] = counts.get(template_of(f), 0) + 1
    assert counts == {"01": 5, "02": 4, "03": 3, "04": 3, "05": 2, "06": 1, "07": 4, "08": 1,
                      "09": 1, "10": 1, "11": 1}
    assert [f for f in feats if f.startswith("09")] == ["09|B>I"]


def test_unigram_never_sees_previous_tag():
    for i in range(1, 5):
        feats = extract_baseline("abcd", i, "E", "S")
        for f in feats:
            if template_of(f) in {"09", "10", "11"}:
                assert f.endswith("|E>S")
            else:
                assert f.endswith("|S") and ">" not in f.split("|")[-1]


def test_pseudo_characters():
    feats = extract_baseline("ab", 1, START_TAG, "B")
    assert "01[-2]=<S>|B" in feats and "01[-1]=<S>|B" in feats
    assert "11=<S>/a|^>B" in feats
    end = extract_baseline("ab", 3, "E", END_TAG)
    assert end == ["09|E>$", "10=</S>|E>$", "11=b/</S>|E>$"]


def test_deterministic():
    assert extract_baseline("abcabc", 3, "B", "E") == extract_baseline("abcabc", 3, "B", "E")


def test_feature_count_every_interior_position():
    rng = np.random.default_rng(0)
    lex = Lexicon(["ab", "bca", "abca"])
    for _ in range(50):
        x = "".join(rng.choice(list("abc"), rng.integers(1, 9)))
        src = list(rng.choice(list("BIES"), len(x)))
        for i in range(1, len(x) + 1):
            assert len(extract_baseline(x, i, "B", "E")) == 26
            assert len(extract_lexicon(x, i, "B", lex)) == 9
            assert len(extract_guide(x, src, i, "B")) == 30


def test_lexicon_templates():
    feats = extract_lexicon("abcd", 1, "B", Lexicon(["ab"]))
    assert feats[:3] == ["L01=<edge>|B", "L02=<edge>|B", "L03=<edge>|B"]
    assert feats[3] == "L04=2|B"
    last = extract_lexicon("abcd", 4, "S", Lexicon(["ab"]))
    assert last[6:] == ["L07=<edge>|S", "L08=<edge>|S", "L09=<edge>|S"]


def test_lexicon_cap():
    x = "abcdefgh"
    feats = extract_lexicon(x, 1, "B", Lexicon([x]), cap=6)
    assert feats[3] == "L04=6+|B"


def test_guide_templates():
    x = "abc"
    src = ["B", "E", "S"]
    feats = extract_guide(x, src, 2, "I")
    assert len(feats) == 30
    tail = feats[23:]
    assert tail == ["G02=E|I", "G03=S|I", "G04=B|I", "G05=B/E|I", "G06=E/S|I", "G07=B/S|I",
                    "G08=B/E/S|I"]
    assert all(f.startswith("G0") and "^E|I" in f for f in feats[:23])
    edge = extract_guide(x, src, 1, "B")
    assert "G04=<S>|B" in edge


def test_guide_length_mismatch():
    with pytest.raises(ValueError):
        extract_guide("abc", ["B", "E"], 1, "B")


class TestIndex:
    def _sents(self):
        return [LabeledSentence.from_tags("abc", [0, 2, 3]), LabeledSentence.from_tags("ab", [3, 3])]

    def test_cutoff_one_keeps_everything_observed(self):
        sents = self._sents()
        idx = build_index(((s, None) for s in sents), [identity_view(BIES.tags)], TemplateConfig())
        for s in sents:
            tags = s.gold_tags(BIES)
            for i in range(1, len(s) + 1):
                prev = START_TAG if i == 1 else tags[i - 2]
                for f in extract_baseline(s.chars, i, prev, tags[i - 1]):
                    assert idx.get(f) is not None
            for f in extract_baseline(s.chars, len(s) + 1, tags[-1], END_TAG):
                assert idx.get(f) is not None
        assert sorted(idx.get(f) for f in idx.strings()) == list(range(idx.size))

    def test_unseen_is_absent_after_freeze(self):
        idx = build_index(((s, None) for s in self._sents()), [identity_view(BIES.tags)],
                          TemplateConfig())
        assert idx.get("01[0]=z|B") is None
        uids, _ = idx.encode(*observations("z", TemplateConfig()))
        assert uids[0, 2] == idx.uni_pad  # 01[0]=z
        with pytest.raises(RuntimeError):
            idx.add([], [[]], [])

    def test_cutoff_drops_rare(self):
        sents = [LabeledSentence.from_tags("ab", [0, 2])] * 2 + [LabeledSentence.from_tags("c", [3])]
        idx = build_index(((s, None) for s in sents), [identity_view(BIES.tags)],
                          TemplateConfig(cutoff=2))
        assert idx.get("01[0]=a|B") is not None
        assert idx.get("01[0]=c|S") is None

    def test_ambiguous_labels_instantiate_every_allowed_tag(self):
        s = LabeledSentence("a", ((0, 3),))
        idx = build_index([(s, None)], [identity_view(BIES.tags)], TemplateConfig())
        assert idx.get("01[0]=a|B") is not None and idx.get("01[0]=a|S") is not None
        assert idx.get("01[0]=a|I") is None

    def test_union_of_template_sets(self):
        lex = Lexicon(["ab"])
        s = self._sents()
        base = build_index(((x, None) for x in s), [identity_view(BIES.tags)], TemplateConfig())
        both = build_index(((x, None) for x in s), [identity_view(BIES.tags)],
                           TemplateConfig(lexicon=True), lex)
        strings = both.strings()
        assert set(base.strings()) < set(strings)
        assert len(set(strings)) == len(strings) == both.size
        assert any(f.startswith("L0") for f in strings)

    def test_vectorize(self):
        idx = build_index(((x, None) for x in self._sents()), [identity_view(BIES.tags)],
                          TemplateConfig())
        fa = "01[0]=a|B"
        vec = idx.vectorize([fa, fa, "nope|B"])
        assert vec == [(idx.get(fa), 2)]

    def test_from_strings_round_trip(self):
        idx = build_index(((x, None) for x in self._sents()), [identity_view(BIES.tags)],
                          TemplateConfig())
        again = FeatureIndex.from_strings(idx.views, idx.strings())
        assert again.strings() == idx.strings()


def oracle_path_score(model, x, path_tags, lexicon=None, guide=None):
    """Sum of weights of the extracted feature strings along a path."""
    theta = model.weights
    n = len(x)
    total = 0.0
    tags = [START_TAG] + list(path_tags) + [END_TAG]
    for i in range(1, n + 2):
        feats = extract_baseline(x, i, tags[i - 1], tags[i])
        if i <= n:
            if lexicon is not None:
                feats += extract_lexicon(x, i, tags[i], lexicon, model.config.lexicon_cap)
            if guide is not None:
                feats += extract_guide(x, guide, i, tags[i])
        for f in feats:
            k = model.index.get(f)
            if k is not None:
                total += theta[k]
    return total


def _model(config, lexicon=None, guides=None):
    sents = [LabeledSentence.from_tags("abcab", [0, 2, 3, 0, 2]),
             LabeledSentence.from_tags("cabc", [3, 0, 1, 2])]
    guides = guides or [None, None]
    idx = build_index(zip(sents, guides), [identity_view(BIES.tags)], config, lexicon)
    m = CrfModel(BIES, idx, config)
    m.weights = np.random.default_rng(3).uniform(-1, 1, idx.size)
    return m


@pytest.mark.parametrize("use_lex,use_guide", [(False, False), (True, False), (False, True),
                                               (True, True)])
def test_composition_matches_feature_sums(use_lex, use_guide):
    lex = Lexicon(["ab", "abc", "ca"]) if use_lex else None
    guides = [list("BESBE"), list("SBIE")] if use_guide else None
    m = _model(TemplateConfig(lexicon=use_lex, guide=use_guide), lex, guides)
    rng = np.random.default_rng(4)
    x = "abcab"
    g = guides[0] if guides else None
    lat = build_lattice(m, x, guide=g, lexicon=lex)
    for _ in range(20):
        path = list(rng.integers(0, 4, len(x)))
        expected = oracle_path_score(m, x, [BIES.tags[t] for t in path], lex, g)
        assert lat.path_score(path) == pytest.approx(expected, abs=1e-12)


def test_toggling_lexicon_adds_only_lexicon_weights():
    lex = Lexicon(["ab", "abc", "ca"])
    with_lex = _model(TemplateConfig(lexicon=True), lex)
    base = _model(TemplateConfig())
    # copy the baseline weights into the lexicon model, lexicon weights at zero
    theta = np.zeros(with_lex.index.size)
    for f in base.index.strings():
        theta[with_lex.index.get(f)] = base.weights[base.index.get(f)]
    with_lex.weights = theta
    x = "cabca"
    a = build_lattice(base, x)
    b = build_lattice(with_lex, x, lexicon=lex)
    np.testing.assert_array_equal(a.unary, b.unary)
    np.testing.assert_array_equal(a.trans, b.trans)
