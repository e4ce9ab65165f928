"""Merge-then-re-decode combination of segmenter outputs.

Each base output votes for one BIES tag per character with equal weight;
the combined output is the highest-voted tag sequence that is a legal
segmentation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import BIES, bies_part

ILLEGAL = frozenset({
    ("B", "S"), ("B", "B"), ("I", "B"), ("I", "S"),
    ("E", "I"), ("E", "E"), ("S", "I"), ("S", "E"),
})

_LEGAL = np.array([[(a, b) not in ILLEGAL for b in BIES] for a in BIES])
_FIRST = np.array([t in ("B", "S") for t in BIES])
_LAST = np.array([t in ("E", "S") for t in BIES])


def legal_transition(a: str, b: str) -> bool:
    return (a, b) not in ILLEGAL


@dataclass(frozen=True)
class VoteLattice:
    votes: np.ndarray  # (n, 4) integer counts in B, I, E, S order
    voters: int

    def __post_init__(self):
        if (self.votes.sum(axis=1) != self.voters).any():
            raise ValueError("every position's votes must sum to the number of voters")

    @property
    def n(self):
        return self.votes.shape[0]

    def score(self, tags: Sequence[str]) -> int:
        return int(sum(self.votes[i, BIES.index(bies_part(t))] for i, t in enumerate(tags)))


def merge_votes(outputs: Sequence[Sequence[str]]) -> VoteLattice:
    """Count per-character tag votes; crossed tags count for their BIES part."""
    if not outputs:
        raise ValueError("no base outputs to merge")
    n = len(outputs[0])
    if n == 0 or any(len(o) != n for o in outputs):
        raise ValueError("base outputs differ in length")
    votes = np.zeros((n, 4), dtype=np.int64)
    for out in outputs:
        for i, t in enumerate(out):
            votes[i, BIES.index(bies_part(t))] += 1
    return VoteLattice(votes, len(outputs))


def redecode(votes: VoteLattice) -> tuple[list[str], int]:
    """Viterbi over vote counts restricted to legal transitions.

    The first tag must be B or S and the last E or S.  Ties go to the lower
    tag index.
    """
    v = votes.votes
    n = votes.n
    neg = np.iinfo(np.int64).min // 4
    delta = np.where(_FIRST, v[0], neg)
    back = np.zeros((n, 4), dtype=np.intp)
    for i in range(1, n):
        cand = np.where(_LEGAL, delta[:, None], neg)
        back[i] = cand.argmax(axis=0)
        delta = cand[back[i], np.arange(4)] + v[i]
    final = np.where(_LAST, delta, neg)
    last = int(final.argmax())
    path = [last]
    for i in range(n - 1, 0, -1):
        path.append(int(back[i, path[-1]]))
    path.reverse()
    return [BIES[t] for t in path], int(final[last])


def ensemble(outputs: Sequence[Sequence[str]]) -> list[str]:
    return redecode(merge_votes(outputs))[0]
