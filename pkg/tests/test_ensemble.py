import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segcrf.corpus import is_well_formed, spans_to_tags, tags_to_spans
from segcrf.ensemble import ILLEGAL, VoteLattice, ensemble, legal_transition, merge_votes, redecode

from oracles import brute_redecode, legal_sequences


def test_vote_example():
    outs = [["B"], ["B"], ["B"], ["S"]]
    # per-position votes only; the sequences themselves need not be well formed
    assert merge_votes(outs).votes.tolist() == [[3, 0, 0, 1]]


def test_two_character_case():
    votes = VoteLattice(np.array([[3, 0, 0, 1], [0, 1, 3, 0]]), 4)
    assert redecode(votes) == (["B", "E"], 6)


def test_single_character_cannot_be_b():
    assert redecode(VoteLattice(np.array([[4, 0, 0, 0]]), 4)) == (["S"], 0)


def test_crossed_outputs_count_for_their_bies_part():
    assert merge_votes([["B-NN", "E-NN"], ["B", "E"]]).votes.tolist() == [[2, 0, 0, 0], [0, 0, 2, 0]]


def test_legal_transitions():
    assert len(ILLEGAL) == 8
    assert sum(legal_transition(a, b) for a, b in itertools.product("BIES", repeat=2)) == 8
    assert legal_transition("B", "I") and legal_transition("E", "B")
    assert not legal_transition("B", "S")


@pytest.mark.parametrize("outs", [[], [["B", "E"], ["S"]], [[]]])
def test_merge_errors(outs):
    with pytest.raises(ValueError):
        merge_votes(outs)


def test_identical_outputs():
    tags = ["B", "I", "E", "S"]
    v = merge_votes([tags] * 4)
    assert (v.votes == 4 * np.eye(4, dtype=int)).all()
    assert ensemble([tags] * 4) == tags


def test_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n = int(rng.integers(1, 6))
        voters = int(rng.integers(1, 6))
        votes = rng.multinomial(voters, [0.25] * 4, size=n)
        tags, score = redecode(VoteLattice(votes, voters))
        assert (tags, score) == brute_redecode(votes)
        assert is_well_formed(tags)


def test_legal_sequence_counts():
    # legal strings are exactly the segmentations, one per cut pattern
    for n in range(1, 7):
        assert len(list(legal_sequences(n))) == 2 ** (n - 1)


words = st.lists(st.integers(1, 4), min_size=1, max_size=6)


@settings(max_examples=100, deadline=None)
@given(st.lists(words, min_size=1, max_size=5), st.randoms(use_true_random=False))
def test_properties(segs, rnd):
    # voters that cover the same number of characters
    n = sum(segs[0])
    outs = []
    for lengths in segs:
        tags = []
        for m in lengths:
            tags += ["S"] if m == 1 else ["B"] + ["I"] * (m - 2) + ["E"]
        outs.append((tags + ["S"] * n)[:n])
    outs = [o if is_well_formed(o) else spans_to_tags(tags_to_spans(o)) for o in outs]
    votes = merge_votes(outs)
    tags, score = redecode(votes)
    assert is_well_formed(tags)
    assert all(score >= votes.score(o) for o in outs)
    shuffled = list(outs)
    rnd.shuffle(shuffled)
    assert ensemble(shuffled) == tags
    if len(outs) == 1:
        assert tags == outs[0]
