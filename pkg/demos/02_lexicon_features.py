"""Dictionary lookups as features: F_B, F_I, F_E and what they add to a weak model.

Run: python3 demos/02_lexicon_features.py
"""

import numpy as np

from segcrf import Hyperparameters, Lexicon, TemplateConfig, f_begin, f_end, f_inside
from segcrf.features import extract_lexicon
from segcrf.pipelines import make_dev_eval, train_baseline
from segcrf.synthetic import make_vocabulary, sample_sentences, to_dataset

# For each character: the longest dictionary word starting at it (F_B),
# strictly containing it (F_I), and ending at it (F_E).
lex = Lexicon(["中国", "中国人", "人民", "国人民"])
x = "中国人民"
for i in range(1, len(x) + 1):
    print(x[i - 1], "F_B", f_begin(x, i, lex), "F_I", f_inside(x, i, lex), "F_E", f_end(x, i, lex))

# The nine lexicon feature strings at the first character, conditioned on tag B.
# Neighbours outside the sentence render as <edge>.
print(extract_lexicon(x, 1, "B", lex))

# With little training data the dictionary supplies word boundaries the
# model has not seen.
rng = np.random.default_rng(3)
vocab = make_vocabulary(rng, size=300)
sents = sample_sentences(rng, vocab, 460)
train, dev = to_dataset("train", sents[:60]), to_dataset("dev", sents[60:])
hp = Hyperparameters(iterations=10)
plain = train_baseline([train], hp=hp)
full_lex = Lexicon(vocab)
with_lex = train_baseline([train], TemplateConfig(lexicon=True), hp, lexicon=full_lex)
print("60 training sentences")
print("  baseline dev F1:", round(make_dev_eval(dev)(plain)["f1"], 4))
print("  +lexicon dev F1:", round(make_dev_eval(dev, lexicon=full_lex)(with_lex)["f1"], 4))
