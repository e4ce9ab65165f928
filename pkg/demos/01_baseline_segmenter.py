"""Train a baseline CRF segmenter on a synthetic corpus, score it, save and reload it.

Run: python3 demos/01_baseline_segmenter.py
"""

import tempfile
from pathlib import Path

import numpy as np

from segcrf import Hyperparameters, load_model, save_model, tag, tags_to_spans
from segcrf.corpus import format_words
from segcrf.pipelines import make_dev_eval, train_baseline
from segcrf.synthetic import make_vocabulary, sample_sentences, to_dataset

rng = np.random.default_rng(0)

# A corpus of "words" drawn from a Zipf-distributed vocabulary stands in for
# real segmented text.  Sentences are word lists; the dataset stores them as
# characters plus one BIES tag per character.
vocab = make_vocabulary(rng, size=200)
sentences = sample_sentences(rng, vocab, 600)
train = to_dataset("train", sentences[:500])
dev = to_dataset("dev", sentences[500:])
print(f"{len(train)} training sentences, {len(dev)} dev sentences")
print("first sentence:", " ".join(sentences[0]))
print("its tags:      ", " ".join(train[0].gold_tags(train.scheme)))

# Training keeps the weights of the iteration with the best dev F1.
model = train_baseline([train], hp=Hyperparameters(iterations=8), dev=dev)
for entry in model.report.history:
    print(f"iteration {entry['iteration']}: dev F1 {entry['f1']:.4f}")
print("kept iteration", model.report.best_iteration, "with", model.index.size, "features")

x = "".join(sentences[-1])
pred = tag(model, x)
print("tagged: ", " ".join(format_words(x, tags_to_spans(pred))))
print("gold:   ", " ".join(sentences[-1]))

# The model file is plain text: scheme, configuration and one weight per feature.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "baseline.model"
    save_model(model, path)
    print(path.read_text(encoding="utf-8").splitlines()[:4])
    again = load_model(path)
    assert tag(again, x) == pred
    print("reloaded model agrees; dev scores:", make_dev_eval(dev)(again))
