"""Converting a corpus from one annotation standard to the other.

A coupled model decodes with the known side fixed; sentences whose
least-confident character falls below the marginal threshold are dropped.

Run: python3 demos/04_annotation_conversion.py
"""

import numpy as np

from segcrf import Hyperparameters
from segcrf.corpus import sentence_words
from segcrf.coupled import convert_annotations
from segcrf.pipelines import coupled_pipeline
from segcrf.synthetic import make_vocabulary, merge_single_char_words, sample_sentences, to_dataset

rng = np.random.default_rng(2)
vocab = make_vocabulary(rng, size=150)
side_a = to_dataset("A", [merge_single_char_words(s) for s in sample_sentences(rng, vocab, 300)])
side_b_words = sample_sentences(rng, vocab, 300)
side_b = to_dataset("B", side_b_words)

model = coupled_pipeline(side_a, [side_b], hp=Hyperparameters(iterations=6, sample_count=300))

test_words = sample_sentences(rng, vocab, 50)
test_b = to_dataset("B-test", test_words)
for threshold in (0.0, 0.8, 0.99):
    converted, report = convert_annotations(model, test_b, threshold=threshold)
    print(f"threshold {threshold}: {report}")

converted, report = convert_annotations(model, test_b, threshold=0.8)
kept = [k for k in range(len(test_b)) if k + 1 not in report.dropped_lines]
correct = sum(sentence_words(s, converted.scheme) == merge_single_char_words(test_words[k])
              for s, k in zip(converted, kept))
print(f"{correct} of {len(converted)} kept sentences match the true A-standard segmentation")
print("B:", " ".join(test_words[kept[0]]))
print("A:", " ".join(sentence_words(converted[0], converted.scheme)))
