"""Merge-then-re-decode: combining several segmenters' outputs.

Run: python3 demos/05_ensemble.py
"""

import numpy as np

from segcrf.ensemble import VoteLattice, legal_transition, merge_votes, redecode

# Each output votes for one tag per character.  Three say B, one says S:
votes = merge_votes([["B"], ["B"], ["B"], ["S"]])
print("votes (B, I, E, S):", votes.votes[0].tolist())

# A lone B is not a legal one-character sentence, so the best legal answer is S.
print("n=1 re-decode:", redecode(VoteLattice(np.array([[4, 0, 0, 0]]), 4)))

# Re-decoding only follows legal transitions, which repairs disagreements.
outputs = [
    ["B", "E", "S", "B", "E"],
    ["B", "E", "B", "E", "S"],
    ["S", "S", "S", "B", "E"],
]
lattice = merge_votes(outputs)
print(lattice.votes.tolist())
tags, score = redecode(lattice)
print("combined:", tags, "score", score)
print("each voter:", [lattice.score(o) for o in outputs])
print("B->S legal?", legal_transition("B", "S"), " E->B legal?", legal_transition("E", "B"))

# Crossed word+POS outputs vote with their segmentation part.
print(merge_votes([["B-NN", "E-NN"], ["S-PU", "S-VV"]]).votes.tolist())
