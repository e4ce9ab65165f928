"""The inference layer on its own: a lattice of scores, partition function,
marginals, and constrained Viterbi.

Run: python3 demos/06_inference.py
"""

import itertools

import numpy as np

from segcrf import Lattice, log_partition, marginals, viterbi

rng = np.random.default_rng(0)
n, T = 3, 4
lat = Lattice(np.ones((n, T), dtype=bool), rng.uniform(-1, 1, (n, T)), rng.uniform(-1, 1, T),
              rng.uniform(-1, 1, (n - 1, T, T)), rng.uniform(-1, 1, T))

# Compare against brute-force enumeration of all 4^3 paths.
scores = [lat.path_score(p) for p in itertools.product(range(T), repeat=n)]
print("log Z  dynamic program:", log_partition(lat))
print("log Z  enumeration:    ", np.log(np.sum(np.exp(scores))))
print("marginals:\n", marginals(lat).round(3))
path, score = viterbi(lat)
print("best path", path, "score", round(score, 4), "max over paths", round(max(scores), 4))

# Restricting position 1 to tag 3 only: probability mass and best path follow.
allowed = lat.allowed.copy()
allowed[1] = False
allowed[1, 3] = True
con = lat.constrain(allowed)
print("constrained best path", viterbi(con)[0])
print("constrained marginals row 1:", marginals(con)[1])
print("P(tag 3 at position 1) =", np.exp(log_partition(con) - log_partition(lat)).round(4),
      "=", marginals(lat)[1, 3].round(4))
