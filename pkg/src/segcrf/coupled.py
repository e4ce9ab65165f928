"""Coupled tagging over bundled tag pairs from two annotation standards.

A bundled tag ``a&b`` pairs a tag of standard A with one of standard B.
Data annotated under one standard only becomes ambiguously labelled data
in the bundled space: each one-side tag allows every bundled tag that
projects onto it.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence


from .corpus import CorpusFormatError, Dataset, LabeledSentence, TagScheme
from .crf import CrfModel, build_lattice, forward_backward, viterbi
from .features import View, extract_baseline, extract_guide, extract_lexicon

logger = logging.getLogger(__name__)

SIDES = ("A", "B")


@dataclass(frozen=True)
class TagMapping:
    """Allowed (A tag, B tag) pairs."""

    pairs: frozenset

    def __init__(self, pairs: Iterable[tuple[str, str]]):
        object.__setattr__(self, "pairs", frozenset((a, b) for a, b in pairs))

    @classmethod
    def full(cls, scheme_a: TagScheme, scheme_b: TagScheme) -> TagMapping:
        return cls((a, b) for a in scheme_a.tags for b in scheme_b.tags)

    @classmethod
    def identity(cls, scheme: TagScheme) -> TagMapping:
        return cls((t, t) for t in scheme.tags)

    def __len__(self):
        return len(self.pairs)


def load_mapping(path) -> TagMapping:
    """Read ``tagA<TAB>tagB`` lines."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not all(parts):
                raise CorpusFormatError("expected tagA<TAB>tagB", path, lineno)
            pairs.append((parts[0], parts[1]))
    return TagMapping(pairs)


@dataclass(frozen=True)
class BundledTagScheme:
    scheme: TagScheme
    scheme_a: TagScheme
    scheme_b: TagScheme
    proj_a: tuple[int, ...]
    proj_b: tuple[int, ...]

    def __len__(self):
        return len(self.scheme)

    def projection(self, side: str) -> tuple[int, ...]:
        if side not in SIDES:
            raise ValueError(f"side must be A or B, not {side!r}")
        return self.proj_a if side == "A" else self.proj_b

    def side_scheme(self, side: str) -> TagScheme:
        return self.scheme_a if side == "A" else self.scheme_b

    def project(self, tags: Sequence[int], side: str) -> list[str]:
        proj, sch = self.projection(side), self.side_scheme(side)
        return [sch.tags[proj[t]] for t in tags]


def bundle(scheme_a: TagScheme, scheme_b: TagScheme, mapping: TagMapping | None = None) -> BundledTagScheme:
    """Product scheme restricted to the mapping's pairs, ordered A-major."""
    if mapping is None:
        mapping = TagMapping.full(scheme_a, scheme_b)
    for a, b in mapping.pairs:
        if a not in scheme_a or b not in scheme_b:
            raise ValueError(f"mapping pair ({a}, {b}) is outside the two schemes")
    used_a = {a for a, _ in mapping.pairs}
    used_b = {b for _, b in mapping.pairs}
    dead = [f"A:{t}" for t in scheme_a.tags if t not in used_a] + \
           [f"B:{t}" for t in scheme_b.tags if t not in used_b]
    if dead:
        raise ValueError(f"mapping leaves dead tags: {', '.join(dead)}")
    tags, pa, pb = [], [], []
    for ia, a in enumerate(scheme_a.tags):
        for ib, b in enumerate(scheme_b.tags):
            if (a, b) in mapping.pairs:
                tags.append(f"{a}&{b}")
                pa.append(ia)
                pb.append(ib)
    return BundledTagScheme(TagScheme(tuple(tags), "bundled"), scheme_a, scheme_b,
                            tuple(pa), tuple(pb))


def bundle_from_schemes(bundled: TagScheme, scheme_a: TagScheme, scheme_b: TagScheme) -> BundledTagScheme:
    """Recover the projections of a stored bundled scheme."""
    pairs = [tuple(t.split("&")) for t in bundled.tags]
    result = bundle(scheme_a, scheme_b, TagMapping(pairs))
    if result.scheme.tags != bundled.tags:
        raise ValueError("bundled tags are not in A-major order of the side schemes")
    return result


def _injective(proj, size):
    return len(set(proj)) == len(proj) == size


def coupled_views(b: BundledTagScheme) -> list[View]:
    """Joint view plus one view per side.

    A side whose projection is a bijection of the bundled tags would only
    duplicate the joint features, so it is left out; with the identity
    mapping the coupled model is then exactly a single-scheme model.
    """
    views = [View("J", b.scheme.tags, tuple(range(len(b))))]
    for side, proj, sch in (("A", b.proj_a, b.scheme_a), ("B", b.proj_b, b.scheme_b)):
        if not _injective(proj, len(b)) or len(sch) != len(b):
            views.append(View(side, sch.tags, proj))
    return views


def expand_one_side(tags: Sequence[str], side: str, b: BundledTagScheme) -> tuple[tuple[int, ...], ...]:
    """Per position, every bundled tag whose ``side`` projection equals the given tag."""
    proj, sch = b.projection(side), b.side_scheme(side)
    out = []
    for tag in tags:
        if tag not in sch:
            raise ValueError(f"unknown {side}-side tag {tag!r}")
        k = sch.index(tag)
        out.append(tuple(t for t, p in enumerate(proj) if p == k))
    return tuple(out)


def expand_dataset(dataset: Dataset, side: str, b: BundledTagScheme) -> Dataset:
    if dataset.scheme != b.side_scheme(side):
        raise ValueError(f"dataset {dataset.name} is not labelled with the {side}-side scheme")
    sents = [LabeledSentence(s.chars, expand_one_side(s.gold_tags(dataset.scheme), side, b))
             for s in dataset]
    return Dataset(dataset.name, sents, b.scheme)


def coupled_features(x: str, i: int, y_prev: int | None, y: int, b: BundledTagScheme,
                     lexicon=None, guide=None, cap: int = 6) -> list[str]:
    """Feature strings at position ``i`` for bundled tags ``y_prev -> y``.

    Every template instantiation is rendered once per view: conditioned on
    the bundled tag and on each side's projection.  ``y_prev=None`` stands
    for the start pseudo tag.
    """
    out = []
    for view in coupled_views(b):
        def name(t):
            return "^" if t is None else view.tags[view.projection[t]]
        feats = extract_baseline(x, i, name(y_prev), name(y))
        if lexicon is not None:
            feats += extract_lexicon(x, i, name(y), lexicon, cap)
        if guide is not None:
            feats += extract_guide(x, guide, i, name(y))
        out += [view.prefix + f for f in feats]
    return out


def side_tags(model: CrfModel, x: str, side: str = "A", guide=None, lexicon=None) -> list[str]:
    """Decode the bundled lattice and report one side's projection."""
    if model.bundle is None:
        raise ValueError("not a coupled model")
    path, _ = viterbi(build_lattice(model, x, None, guide, lexicon))
    return model.bundle.project(path, side)


@dataclass
class ConversionReport:
    kept: int = 0
    dropped: int = 0
    dropped_lines: list[int] = field(default_factory=list)

    def __str__(self):
        return f"kept {self.kept} dropped {self.dropped}"


def convert_sentence(model: CrfModel, sent: LabeledSentence, source_scheme: TagScheme,
                     threshold: float, side_in: str = "B"):
    """Constrained decoding with ``side_in`` fixed; None when confidence is too low."""
    b = model.bundle
    side_out = "A" if side_in == "B" else "B"
    constraints = expand_one_side(sent.gold_tags(source_scheme), side_in, b)
    lat = build_lattice(model, sent.chars, constraints)
    path, _ = viterbi(lat)
    _, nodes, _ = forward_backward(lat)
    if nodes.max(axis=1).min() < threshold:
        return None
    out_scheme = b.side_scheme(side_out)
    return LabeledSentence.from_tags(sent.chars, [out_scheme.index(t) for t in b.project(path, side_out)])


def convert_annotations(model: CrfModel, dataset: Dataset, threshold: float = 0.8,
                        side_in: str = "B", threads: int = 1) -> tuple[Dataset, ConversionReport]:
    """Convert a one-side corpus to the other standard via constrained decoding.

    A sentence is dropped when any character's highest bundled-tag marginal
    under the constrained lattice falls below ``threshold``.
    """
    b = model.bundle
    if b is None:
        raise ValueError("annotation conversion needs a coupled model")
    if dataset.scheme != b.side_scheme(side_in):
        raise ValueError(f"dataset scheme does not match the model's {side_in} side")

    def work(sent):
        return convert_sentence(model, sent, dataset.scheme, threshold, side_in)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, dataset.sentences))
    else:
        results = [work(s) for s in dataset.sentences]
    report = ConversionReport()
    kept = []
    for k, r in enumerate(results):
        if r is None:
            report.dropped += 1
            report.dropped_lines.append(k + 1)
        else:
            report.kept += 1
            kept.append(r)
    logger.info("conversion of %s: %s", dataset.name, report)
    side_out = "A" if side_in == "B" else "B"
    return Dataset(dataset.name, kept, b.side_scheme(side_out)), report
