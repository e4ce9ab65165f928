"""Exploiting a large corpus annotated under a different standard.

The target standard joins adjacent single-character words; the source
standard does not.  Three ways to train a target segmenter are compared:
the small target corpus alone, guide features from a source-trained model,
and one coupled model over bundled (target, source) tags.

Run: python3 demos/03_heterogeneous_corpora.py   (about half a minute)
"""

import numpy as np

from segcrf import Hyperparameters, tag
from segcrf.coupled import TagMapping, side_tags
from segcrf.pipelines import coupled_pipeline, guide_pipeline, make_dev_eval, train_baseline
from segcrf.synthetic import make_vocabulary, merge_single_char_words, sample_sentences, to_dataset

rng = np.random.default_rng(1)
vocab = make_vocabulary(rng)
source = to_dataset("source", sample_sentences(rng, vocab, 1000))
target_words = [merge_single_char_words(s) for s in sample_sentences(rng, vocab, 300)]
target = to_dataset("target", target_words[:100])
target_dev = to_dataset("target-dev", target_words[100:])

hp = Hyperparameters(iterations=8, sample_count=200)
source_model = train_baseline([source], hp=hp)
print("source model on target-standard dev: F1", round(make_dev_eval(target_dev)(source_model)["f1"], 4))

base = train_baseline([target], hp=hp, dev=target_dev)
guide = guide_pipeline([source], target, hp=hp, target_dev=target_dev, source_model=source_model)

# With the full 16-tag mapping the target side of every source sentence is
# unconstrained, and the likelihood is equally happy with any labelling of
# it, well formed or not.  On this small target corpus training drifts into
# such a labelling.  A mapping that only admits the pairs the two standards
# can actually produce (identical tags, or a joined word over two single
# characters) keeps the free side honest.
full = coupled_pipeline(target, [source], hp=hp, dev_a=target_dev)
loose = TagMapping([(t, t) for t in "BIES"] + [("B", "S"), ("E", "S")])
coupled = coupled_pipeline(target, [source], loose, hp=hp, dev_a=target_dev)
for name, m in (("target only", base), ("guide features", guide), ("coupled, full", full),
                ("coupled, loose", coupled)):
    print(f"{name:15s} dev F1 {max(e['f1'] for e in m.report.history):.4f}")

# The coupled model tags with bundled labels such as "B&S"; either side can be read off.
x = "".join(target_words[-1])
print("bundled tags:", coupled.scheme.tags)
print("target side: ", side_tags(coupled, x, "A"))
print("source side: ", side_tags(coupled, x, "B"))
print("guide model: ", tag(guide, x))
