"""Sentences, tag schemes, segmentations and corpus file I/O.

Words are encoded with the character-level BIES scheme: ``B``/``I``/``E``
mark the beginning, inside and end of a multi-character word and ``S`` a
single-character word.  Joint segmentation and POS tagging crosses every
BIES tag with a POS label (``B-NN``).
"""

from __future__ import annotations

import logging
import unicodedata
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

BIES = ("B", "I", "E", "S")

_RESERVED = set("|>&\t\n\r ")
_PSEUDO_TAGS = ("^", "$")


class CorpusFormatError(ValueError):
    """Raised on malformed corpus, tag or mapping files."""

    def __init__(self, message, path=None, lineno=None):
        where = ""
        if path is not None:
            where = f"{path}:"
        if lineno is not None:
            where += f"{lineno}:"
        super().__init__(f"{where} {message}" if where else message)
        self.path = path
        self.lineno = lineno


@dataclass(frozen=True)
class TagScheme:
    tags: tuple[str, ...]
    kind: str = "BIES"

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        if self.kind not in ("BIES", "BIES-cross-POS", "bundled"):
            raise ValueError(f"unknown scheme kind {self.kind!r}")
        if not self.tags:
            raise ValueError("a tag scheme needs at least one tag")
        if len(set(self.tags)) != len(self.tags):
            raise ValueError("tag names must be unique")
        for t in self.tags:
            if not t or any(ch in _RESERVED or ch.isspace() for ch in t.replace("&", "")):
                raise ValueError(f"invalid tag name {t!r}")
            if t in _PSEUDO_TAGS:
                raise ValueError(f"tag name {t!r} is reserved for the start/end pseudo tags")
        if self.kind == "BIES" and self.tags != BIES:
            raise ValueError("a BIES scheme has exactly the tags B, I, E, S in that order")
        object.__setattr__(self, "_lookup", {t: k for k, t in enumerate(self.tags)})

    @classmethod
    def bies(cls) -> TagScheme:
        return cls(BIES, "BIES")

    def __len__(self):
        return len(self.tags)

    def index(self, tag: str) -> int:
        try:
            return self._lookup[tag]
        except KeyError:
            raise KeyError(f"tag {tag!r} is not in the scheme") from None

    def __contains__(self, tag):
        return tag in self._lookup

    @property
    def pos_inventory(self) -> tuple[str, ...]:
        if self.kind != "BIES-cross-POS":
            return ()
        seen = []
        for t in self.tags:
            pos = t.split("-", 1)[1]
            if pos not in seen:
                seen.append(pos)
        return tuple(seen)


def cross_scheme(base: TagScheme, pos_inventory: Sequence[str]) -> TagScheme:
    """Cross a BIES scheme with POS labels, BIES-major (``B-NN, B-VV, I-NN, ...``)."""
    if base.kind != "BIES":
        raise ValueError("only a plain BIES scheme can be crossed with POS labels")
    pos_inventory = list(pos_inventory)
    if not pos_inventory:
        raise ValueError("empty POS inventory")
    if len(set(pos_inventory)) != len(pos_inventory):
        raise ValueError("duplicate POS labels in inventory")
    return TagScheme(tuple(f"{b}-{p}" for b in base.tags for p in pos_inventory), "BIES-cross-POS")


def bies_part(tag: str) -> str:
    """The BIES component of a plain or crossed tag name."""
    return tag.split("-", 1)[0]


def pos_part(tag: str) -> str | None:
    parts = tag.split("-", 1)
    return parts[1] if len(parts) == 2 else None


def check_sentence(chars: str) -> str:
    if not chars:
        raise ValueError("empty sentence")
    for c in chars:
        if c.isspace():
            raise ValueError(f"sentence contains whitespace: {chars!r}")
    return chars


@dataclass(frozen=True)
class LabeledSentence:
    """A sentence with a non-empty set of allowed tag indices per character."""

    chars: str
    labels: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        check_sentence(self.chars)
        labels = tuple(tuple(sorted(set(s))) for s in self.labels)
        if len(labels) != len(self.chars):
            raise ValueError(
                f"{len(labels)} label sets for a sentence of {len(self.chars)} characters")
        if any(not s for s in labels):
            raise ValueError("label sets must be non-empty")
        object.__setattr__(self, "labels", labels)

    @classmethod
    def from_tags(cls, chars: str, tags: Sequence[int]) -> LabeledSentence:
        return cls(chars, tuple((t,) for t in tags))

    def __len__(self):
        return len(self.chars)

    @property
    def is_supervised(self) -> bool:
        return all(len(s) == 1 for s in self.labels)

    @property
    def gold(self) -> tuple[int, ...]:
        if not self.is_supervised:
            raise ValueError("sentence carries ambiguous labels")
        return tuple(s[0] for s in self.labels)

    def gold_tags(self, scheme: TagScheme) -> list[str]:
        return [scheme.tags[t] for t in self.gold]


@dataclass(frozen=True)
class SpanSegmentation:
    """Half-open ``(start, end)`` word spans exactly covering ``[0, n)``.

    ``labels`` optionally carries one POS label per span.
    """

    spans: tuple[tuple[int, int], ...]
    labels: tuple[str | None, ...] | None = None

    def __post_init__(self):
        spans = tuple((int(a), int(b)) for a, b in self.spans)
        if not spans:
            raise ValueError("a segmentation needs at least one span")
        pos = 0
        for a, b in spans:
            if a != pos or b <= a:
                raise ValueError(f"spans are not contiguous and non-empty: {spans}")
            pos = b
        object.__setattr__(self, "spans", spans)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != len(spans):
                raise ValueError("one label per span is required")
            object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.spans)

    @property
    def n(self) -> int:
        return self.spans[-1][1]

    def words(self, chars: str) -> list[str]:
        if len(chars) != self.n:
            raise ValueError("segmentation does not match the sentence length")
        return [chars[a:b] for a, b in self.spans]

    @classmethod
    def from_words(cls, words: Sequence[str], labels=None) -> SpanSegmentation:
        spans, pos = [], 0
        for w in words:
            spans.append((pos, pos + len(w)))
            pos += len(w)
        return cls(tuple(spans), None if labels is None else tuple(labels))


@dataclass
class Dataset:
    name: str
    sentences: list[LabeledSentence]
    scheme: TagScheme
    skipped: int = 0

    def __len__(self):
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def __getitem__(self, k):
        return self.sentences[k]


def tags_to_spans(tags: Sequence[str]) -> SpanSegmentation:
    """Decode BIES tags (plain or crossed) into word spans.

    Total: a boundary is closed before every B and S and after every E and
    S, so ill-formed sequences are repaired rather than rejected.  The label
    of a span is the POS part of its first character's tag, if any.
    """
    if len(tags) == 0:
        raise ValueError("empty tag sequence")
    spans, labels = [], []
    start = 0
    for k, tag in enumerate(tags):
        b = bies_part(tag)
        if b in ("B", "S") and k > start:
            spans.append((start, k))
            start = k
        if b in ("E", "S"):
            spans.append((start, k + 1))
            start = k + 1
    if start < len(tags):
        spans.append((start, len(tags)))
    labels = [pos_part(tags[a]) for a, _ in spans]
    if all(p is None for p in labels):
        return SpanSegmentation(tuple(spans))
    return SpanSegmentation(tuple(spans), tuple(labels))


def is_well_formed(tags: Sequence[str]) -> bool:
    """True when ``tags`` is a legal BIES sequence (no repair needed)."""
    prev = "S"
    for tag in tags:
        b = bies_part(tag)
        if b in ("B", "S") and prev not in ("E", "S"):
            return False
        if b in ("I", "E") and prev not in ("B", "I"):
            return False
        prev = b
    return prev in ("E", "S")


def spans_to_tags(seg: SpanSegmentation) -> list[str]:
    tags = []
    for k, (a, b) in enumerate(seg.spans):
        length = b - a
        word = ["S"] if length == 1 else ["B"] + ["I"] * (length - 2) + ["E"]
        if seg.labels is not None and seg.labels[k] is not None:
            word = [f"{t}-{seg.labels[k]}" for t in word]
        tags.extend(word)
    return tags


def word_tags(length: int) -> list[str]:
    return ["S"] if length == 1 else ["B"] + ["I"] * (length - 2) + ["E"]


_TIME_CHARS = set("年月日时分秒")
_NUMBER_CHARS = set("0123456789０１２３４５６７８９〇一二三四五六七八九十百千万亿两")


def classify_char_type(c: str) -> str:
    """Coarse character class: time, number, punctuation, special or else."""
    if c in _TIME_CHARS:
        return "time"
    if c in _NUMBER_CHARS:
        return "number"
    if c in "@#":
        return "special"
    cat = unicodedata.category(c)
    if cat.startswith("P"):
        return "punctuation"
    if cat.startswith("S"):
        return "special"
    return "else"


# -- file formats -----------------------------------------------------------

def split_token(token: str, joint: bool, path=None, lineno=None) -> tuple[str, str | None]:
    if not joint:
        return token, None
    word, sep, pos = token.rpartition("_")
    if not sep or not word:
        raise CorpusFormatError(f"token {token!r} is not of the form word_POS", path, lineno)
    if not pos:
        raise CorpusFormatError(f"token {token!r} has an empty POS label", path, lineno)
    return word, pos


def labeled_from_words(words: Sequence[str], scheme: TagScheme,
                       pos: Sequence[str] | None = None) -> LabeledSentence:
    tags = []
    for k, w in enumerate(words):
        if not w:
            raise ValueError("empty word")
        bies = word_tags(len(w))
        if scheme.kind == "BIES-cross-POS":
            if pos is None or pos[k] is None:
                raise ValueError(f"word {w!r} lacks a POS label")
            bies = [f"{t}-{pos[k]}" for t in bies]
        tags.extend(scheme.index(t) for t in bies)
    return LabeledSentence.from_tags("".join(words), tags)


def parse_segmented_line(line: str, scheme: TagScheme, path=None, lineno=None):
    """Parse one corpus line into ``(words, pos labels or None)``; None for blank lines."""
    tokens = line.split()
    if not tokens:
        return None
    joint = scheme.kind == "BIES-cross-POS"
    words, labels = [], []
    for tok in tokens:
        word, pos = split_token(tok, joint, path, lineno)
        if joint and f"S-{pos}" not in scheme:
            raise CorpusFormatError(f"POS label {pos!r} is not in the inventory", path, lineno)
        words.append(word)
        labels.append(pos)
    return words, (labels if joint else None)


def read_segmented_corpus(path, scheme: TagScheme, name: str | None = None) -> Dataset:
    """Read a word-segmented (optionally ``word_POS``) corpus into a Dataset."""
    if scheme.kind == "bundled":
        raise ValueError("corpora are read against a one-side scheme")
    path = Path(path)
    sentences, skipped = [], 0
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            parsed = parse_segmented_line(line, scheme, path, lineno)
            if parsed is None:
                skipped += 1
                continue
            words, pos = parsed
            sentences.append(labeled_from_words(words, scheme, pos))
    if skipped:
        logger.warning("%s: skipped %d blank lines", path, skipped)
    return Dataset(name or path.stem, sentences, scheme, skipped)


def collect_pos_inventory(paths: Iterable) -> list[str]:
    """POS labels in order of first appearance across ``word_POS`` corpora."""
    seen = {}
    for path in paths:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                for tok in line.split():
                    _, pos = split_token(tok, True, path, lineno)
                    seen.setdefault(pos, None)
    return list(seen)


def sentence_words(sent: LabeledSentence, scheme: TagScheme) -> list[str]:
    """Render a supervised sentence as tokens (``word`` or ``word_POS``)."""
    seg = tags_to_spans(sent.gold_tags(scheme))
    return format_words(sent.chars, seg)


def format_words(chars: str, seg: SpanSegmentation) -> list[str]:
    words = seg.words(chars)
    if seg.labels is None:
        return words
    return [w if p is None else f"{w}_{p}" for w, p in zip(words, seg.labels)]


def write_segmented_corpus(path, lines: Iterable[Sequence[str]]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for words in lines:
            fh.write(" ".join(words) + "\n")


def write_dataset(path, dataset: Dataset):
    write_segmented_corpus(path, (sentence_words(s, dataset.scheme) for s in dataset))


def read_raw_text(path) -> list[str]:
    """One sentence per line; whitespace inside a line is dropped."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            chars = "".join(line.split())
            if chars:
                out.append(chars)
    return out


def read_tag_file(path) -> list[list[str]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tags = line.split()
            if tags:
                out.append(tags)
    return out


def write_tag_file(path, sequences: Iterable[Sequence[str]]):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for tags in sequences:
            fh.write(" ".join(tags) + "\n")
