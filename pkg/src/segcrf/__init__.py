"""Character-based Chinese word segmentation with linear-chain CRFs.

Baseline, lexicon and guide feature templates, coupled training over
bundled tag spaces from heterogeneous corpora, annotation conversion and
merge-then-re-decode ensembling.
"""

from .corpus import (
    BIES,
    Dataset,
    LabeledSentence,
    SpanSegmentation,
    TagScheme,
    classify_char_type,
    cross_scheme,
    read_segmented_corpus,
    spans_to_tags,
    tags_to_spans,
)
from .crf import (
    CrfModel,
    Hyperparameters,
    Lattice,
    build_lattice,
    gradient,
    load_model,
    log_likelihood,
    log_partition,
    marginals,
    save_model,
    tag,
    train,
    viterbi,
)
from .features import TemplateConfig
from .lexicon import Lexicon, f_begin, f_end, f_inside, load_lexicon

__version__ = "0.1.0"

__all__ = [
    "BIES",
    "build_lattice",
    "classify_char_type",
    "CrfModel",
    "cross_scheme",
    "Dataset",
    "f_begin",
    "f_end",
    "f_inside",
    "gradient",
    "Hyperparameters",
    "LabeledSentence",
    "Lattice",
    "Lexicon",
    "load_lexicon",
    "load_model",
    "log_likelihood",
    "log_partition",
    "marginals",
    "read_segmented_corpus",
    "save_model",
    "spans_to_tags",
    "SpanSegmentation",
    "tag",
    "tags_to_spans",
    "TagScheme",
    "TemplateConfig",
    "train",
    "viterbi",
]
