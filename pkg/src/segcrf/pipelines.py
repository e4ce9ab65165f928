"""Training recipes: baseline, guide features, coupled, and corpus weighting."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Sequence

import numpy as np

from .corpus import Dataset, tags_to_spans
from .coupled import TagMapping, bundle, coupled_views, expand_dataset
from .crf import (
    CrfModel,
    Hyperparameters,
    ShuffleSampler,
    examples_from,
    new_model,
    tag,
    train,
    viterbi,
)
from .evaluation import char_accuracy, word_prf
from .features import TemplateConfig
from .lexicon import Lexicon

logger = logging.getLogger(__name__)


class WeightedSampler:
    """Per iteration, ``count`` sentences from every dataset, merged and shuffled.

    Datasets smaller than ``count`` are sampled with replacement.
    """

    def __init__(self, sizes: Sequence[int], count: int = 5000, seed: int = 0):
        if not sizes:
            raise ValueError("no datasets to sample from")
        if any(m == 0 for m in sizes):
            raise ValueError("cannot sample from an empty dataset")
        if count < 1:
            raise ValueError("sample count must be at least 1")
        self.sizes = list(sizes)
        self.count = count
        self.seed = seed

    def batch(self, iteration: int) -> list[tuple[int, int]]:
        rng = np.random.default_rng([self.seed, iteration])
        picked = []
        for d, m in enumerate(self.sizes):
            if m >= self.count:
                ks = rng.choice(m, self.count, replace=False)
            else:
                ks = rng.integers(0, m, self.count)
            picked += [(d, int(k)) for k in ks]
        order = rng.permutation(len(picked))
        return [picked[k] for k in order]

    def __iter__(self):
        it = 0
        while True:
            yield self.batch(it)
            it += 1


def weighted_sampler(datasets: Sequence, per_dataset_count: int = 5000, seed: int = 0) -> WeightedSampler:
    return WeightedSampler([len(d) for d in datasets], per_dataset_count, seed)


def _sampler_for(datasets, hp: Hyperparameters):
    if len(datasets) > 1:
        return weighted_sampler(datasets, hp.sample_count, hp.seed)
    return ShuffleSampler([len(d) for d in datasets], hp.seed)


def _map(fn, items, threads):
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def make_dev_eval(dev: Dataset, side: str | None = None, guides=None, lexicon=None, threads=1):
    """Word F1 and character accuracy on ``dev`` (on one side for coupled models)."""
    gold = [s.gold_tags(dev.scheme) for s in dev]
    gold_spans = [tags_to_spans(g) for g in gold]

    cache = {}

    def evaluate(model: CrfModel) -> dict:
        if cache.get("index") is not model.index:
            # the index is frozen during training, so encodings stay valid
            cache["index"] = model.index
            cache["enc"] = _map(lambda k: model.encode(dev[k].chars, guides[k] if guides else None,
                                                       lexicon), range(len(dev)), threads)

        def one(k):
            path, _ = viterbi(model.lattice_from_encoded(cache["enc"][k]))
            if side is not None:
                return model.bundle.project(path, side)
            return [model.scheme.tags[t] for t in path]

        pred = _map(one, range(len(dev)), threads)
        prf = word_prf(gold_spans, [tags_to_spans(p) for p in pred])
        return {"acc": char_accuracy(gold, pred), "p": prf.precision, "r": prf.recall, "f1": prf.f1}

    return evaluate


def train_baseline(datasets: Sequence[Dataset], config: TemplateConfig | None = None,
                   hp: Hyperparameters | None = None, dev: Dataset | None = None,
                   lexicon: Lexicon | None = None) -> CrfModel:
    """Plain (optionally lexicon-enhanced) CRF on one or more same-scheme datasets."""
    config = config or TemplateConfig()
    hp = hp or Hyperparameters()
    if not datasets:
        raise ValueError("no training datasets")
    scheme = datasets[0].scheme
    if any(d.scheme != scheme for d in datasets):
        raise ValueError("all training datasets must share one tag scheme")
    exs = [examples_from(d) for d in datasets]
    model = new_model(scheme, exs, config, lexicon=lexicon)
    dev_eval = make_dev_eval(dev, lexicon=lexicon) if dev is not None else None
    model.report = train(model, exs, _sampler_for(exs, hp), hp, dev_eval, lexicon)
    return model


def guide_pipeline(source_datasets: Sequence[Dataset], target: Dataset,
                   config: TemplateConfig | None = None, hp: Hyperparameters | None = None,
                   target_dev: Dataset | None = None, source_dev: Dataset | None = None,
                   lexicon: Lexicon | None = None, source_model: CrfModel | None = None,
                   threads: int = 1) -> CrfModel:
    """Train a source model, tag the target data with it, train the target with guide features.

    The returned model carries the source model in ``source_model``; tagging
    without explicit source annotations runs it on the fly.
    """
    config = replace(config or TemplateConfig(), guide=False)
    hp = hp or Hyperparameters()
    if source_model is None:
        source_model = train_baseline(source_datasets, config, hp, source_dev, lexicon)

    def annotate(ds):
        return _map(lambda s: tag(source_model, s.chars), ds.sentences, threads)

    guides = annotate(target)
    exs = [examples_from(target, guides)]
    target_config = replace(config, guide=True)
    model = new_model(target.scheme, exs, target_config, lexicon=lexicon)
    model.source_model = source_model
    dev_eval = None
    if target_dev is not None:
        dev_eval = make_dev_eval(target_dev, guides=annotate(target_dev), lexicon=lexicon,
                                 threads=threads)
    model.report = train(model, exs, _sampler_for(exs, hp), hp, dev_eval, lexicon)
    return model


def coupled_pipeline(dataset_a: Dataset, datasets_b: Sequence[Dataset],
                     mapping: TagMapping | None = None, config: TemplateConfig | None = None,
                     hp: Hyperparameters | None = None, dev_a: Dataset | None = None,
                     lexicon: Lexicon | None = None) -> CrfModel:
    """Train one CRF over bundled tags from side-A and side-B corpora.

    One-side gold tags become ambiguous bundled label sets; the corpora are
    balanced with the weighted sampler.
    """
    config = config or TemplateConfig()
    hp = hp or Hyperparameters()
    if not datasets_b:
        raise ValueError("coupled training needs at least one side-B dataset")
    scheme_b = datasets_b[0].scheme
    if any(d.scheme != scheme_b for d in datasets_b):
        raise ValueError("side-B datasets must share one tag scheme")
    b = bundle(dataset_a.scheme, scheme_b, mapping)
    expanded = [expand_dataset(dataset_a, "A", b)] + [expand_dataset(d, "B", b) for d in datasets_b]
    exs = [examples_from(d) for d in expanded]
    model = new_model(b.scheme, exs, config, views=coupled_views(b), lexicon=lexicon, bundle=b)
    dev_eval = make_dev_eval(dev_a, side="A", lexicon=lexicon) if dev_a is not None else None
    model.report = train(model, exs, _sampler_for(exs, hp), hp, dev_eval, lexicon)
    return model
