"""Feature templates and the feature index.

Templates are split into *observations* (template id plus the extracted
material, e.g. ``01[-1]=中``) and the tag(s) they are conjoined with.  A
feature string is ``observation|tag`` for unigram templates and
``observation|prev>tag`` for the transition templates 09-11; the sentence
start and end pseudo tags render as ``^`` and ``$``.

Unigram observations are emitted for positions 1..n.  Position n+1 only
carries transition observations: its tag is the fixed end tag, so unigram
features there would score every path identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import classify_char_type
from .lexicon import DEFAULT_CAP, Lexicon, render_length

BOS = "<S>"
EOS = "</S>"
START_TAG = "^"
END_TAG = "$"
EDGE = "<edge>"

_TYPE_CODE = {"time": "T", "number": "N", "punctuation": "P", "special": "X", "else": "O"}

UNIGRAM_COUNT = 23
LEXICON_COUNT = 9
GUIDE_COUNT = UNIGRAM_COUNT + 7
BIGRAM_COUNT = 3


@dataclass(frozen=True)
class TemplateConfig:
    baseline: bool = True
    lexicon: bool = False
    guide: bool = False
    lexicon_cap: int = DEFAULT_CAP
    cutoff: int = 1

    def unigram_width(self) -> int:
        k = 0
        if self.baseline:
            k += UNIGRAM_COUNT
        if self.lexicon:
            k += LEXICON_COUNT
        if self.guide:
            k += GUIDE_COUNT
        return k


class _Context:
    """Padded characters and character types for one sentence."""

    def __init__(self, x: str):
        self.n = len(x)
        self.chars = [BOS, BOS] + list(x) + [EOS, EOS]
        self.types = [BOS, BOS] + [_TYPE_CODE[classify_char_type(c)] for c in x] + [EOS, EOS]

    def c(self, k):
        # 1-based character position; c_0 and c_{n+1} are pseudo characters
        return self.chars[k + 1]

    def t(self, k):
        return self.types[k + 1]


def _unigram_obs(ctx: _Context, i: int) -> list[str]:
    c, t = ctx.c, ctx.t
    ci = c(i)
    out = [f"01[{d}]={c(i + d)}" for d in (-2, -1, 0, 1, 2)]
    out += [f"02[{k - i}]={c(k - 1)}/{c(k)}" for k in range(i - 1, i + 3)]
    out += [f"03[{k - i}]={c(k - 1)}/{c(k)}/{c(k + 1)}" for k in range(i - 1, i + 2)]
    out += [f"04[{k - i}]={t(k)}" for k in range(i - 1, i + 2)]
    out += [f"05[{k - i}]={t(k - 1)}/{t(k)}" for k in range(i, i + 2)]
    out.append(f"06={t(i - 1)}/{t(i)}/{t(i + 1)}")
    out += [f"07[{d}]={int(ci == c(i + d))}" for d in (-2, -1, 1, 2)]
    out.append(f"08={int(c(i - 1) == c(i + 1))}")
    return out


def _bigram_obs(ctx: _Context, i: int) -> list[str]:
    return ["09", f"10={ctx.c(i)}", f"11={ctx.c(i - 1)}/{ctx.c(i)}"]


def _lexicon_obs(lengths, n: int, i: int, cap: int) -> list[str]:
    begin, inside, end = lengths
    out = []
    for slot, k in enumerate((i - 1, i, i + 1)):
        for part, arr in enumerate((begin, inside, end)):
            tid = slot * 3 + part + 1
            val = render_length(arr[k - 1], cap) if 1 <= k <= n else EDGE
            out.append(f"L{tid:02d}={val}")
    return out


def _guide_obs(uni: list[str], src: list[str], i: int) -> list[str]:
    # src is padded with one pseudo tag on each side; src[i] is y_i^S
    prev, cur, nxt = src[i - 1], src[i], src[i + 1]
    out = [f"G{o}^{cur}" for o in uni]
    out += [
        f"G02={cur}",
        f"G03={nxt}",
        f"G04={prev}",
        f"G05={prev}/{cur}",
        f"G06={cur}/{nxt}",
        f"G07={prev}/{nxt}",
        f"G08={prev}/{cur}/{nxt}",
    ]
    return out


def _check_position(x, i):
    if not 1 <= i <= len(x) + 1:
        raise IndexError(f"position {i} is outside 1..{len(x) + 1}")


def extract_baseline(x: str, i: int, y_prev: str, y: str) -> list[str]:
    """Baseline feature strings at 1-based position ``i`` (templates 01-11).

    At ``i = n+1`` (the transition into the end tag) only templates 09-11 apply.
    """
    _check_position(x, i)
    ctx = _Context(x)
    uni = [f"{o}|{y}" for o in _unigram_obs(ctx, i)] if i <= len(x) else []
    return uni + [f"{o}|{y_prev}>{y}" for o in _bigram_obs(ctx, i)]


def extract_lexicon(x: str, i: int, y: str, D: Lexicon, cap: int = DEFAULT_CAP) -> list[str]:
    _check_position(x, i)
    return [f"{o}|{y}" for o in _lexicon_obs(D.span_lengths(x), len(x), i, cap)]


def extract_guide(x: str, y_src: Sequence[str], i: int, y: str) -> list[str]:
    if len(y_src) != len(x):
        raise ValueError(f"{len(y_src)} source tags for a sentence of {len(x)} characters")
    _check_position(x, i)
    ctx = _Context(x)
    src = [BOS] + list(y_src) + [BOS]
    return [f"{o}|{y}" for o in _guide_obs(_unigram_obs(ctx, i), src, i)]


def observations(x: str, config: TemplateConfig, lexicon: Lexicon | None = None,
                 guide: Sequence[str] | None = None) -> tuple[list[list[str]], list[list[str]]]:
    """Per-position unigram observations (n lists) and transition observations (n+1 lists)."""
    n = len(x)
    ctx = _Context(x)
    lengths = None
    if config.lexicon:
        if lexicon is None:
            raise ValueError("lexicon features are enabled but no lexicon was supplied")
        lengths = lexicon.span_lengths(x)
    src = None
    if config.guide:
        if guide is None:
            raise ValueError("guide features are enabled but no source annotations were supplied")
        if len(guide) != n:
            raise ValueError(f"{len(guide)} source tags for a sentence of {n} characters")
        src = [BOS] + list(guide) + [BOS]
    uni = []
    for i in range(1, n + 1):
        base = _unigram_obs(ctx, i)
        obs = list(base) if config.baseline else []
        if lengths is not None:
            obs += _lexicon_obs(lengths, n, i, config.lexicon_cap)
        if src is not None:
            obs += _guide_obs(base, src, i)
        uni.append(obs)
    if config.baseline:
        bi = [_bigram_obs(ctx, i) for i in range(1, n + 2)]
    else:
        bi = [[] for _ in range(n + 1)]
    return uni, bi


@dataclass(frozen=True)
class View:
    """A labelling of the model's tags under which features are conjoined.

    ``projection[t]`` is the view tag of model tag ``t``.  Plain models have
    a single identity view; coupled models add one view per side.
    """

    name: str
    tags: tuple[str, ...]
    projection: tuple[int, ...]

    @property
    def prefix(self):
        return f"{self.name}/" if self.name else ""

    def extended_projection(self) -> np.ndarray:
        # start/end pseudo tags sit one past the last real tag on both sides
        return np.array(list(self.projection) + [len(self.tags)], dtype=np.intp)

    def is_identity(self) -> bool:
        return self.projection == tuple(range(len(self.projection))) and \
            len(self.tags) == len(self.projection)


def identity_view(tags: Sequence[str]) -> View:
    return View("", tuple(tags), tuple(range(len(tags))))


class FeatureIndex:
    """Maps feature strings to dense ids.

    Observation strings get rows; a feature is a (view, row, tag) or
    (view, row, prev, tag) cell and only cells seen at least ``cutoff``
    times in training are active.  Ids are assigned view by view, unigram
    cells before transition cells, in row-major order.
    """

    def __init__(self, views: Sequence[View], cutoff: int = 1):
        self.views = tuple(views)
        self.cutoff = cutoff
        self.uni_rows: dict[str, int] = {}
        self.bi_rows: dict[str, int] = {}
        self.frozen = False
        self._uni_keys = [[] for _ in self.views]
        self._bi_keys = [[] for _ in self.views]
        self._lookup = None

    @property
    def num_tags(self):
        return len(self.views[0].projection)

    def _rows(self, table, obs_lists):
        rows = []
        for obs in obs_lists:
            r = []
            for o in obs:
                k = table.get(o)
                if k is None:
                    k = table[o] = len(table)
                r.append(k)
            rows.append(r)
        return rows

    def add(self, uni_obs, bi_obs, labels: Sequence[Sequence[int]]):
        """Count features of one sentence for every allowed tag (ambiguous labels included)."""
        if self.frozen:
            raise RuntimeError("index is frozen")
        n = len(labels)
        T = self.num_tags
        allowed = np.zeros((n, T), dtype=bool)
        for p, s in enumerate(labels):
            allowed[p, list(s)] = True
        urows = np.array(self._rows(self.uni_rows, uni_obs), dtype=np.int64).reshape(n, -1)
        brows = np.array(self._rows(self.bi_rows, bi_obs), dtype=np.int64).reshape(n + 1, -1)
        for v, view in enumerate(self.views):
            Tv = len(view.tags)
            proj = np.array(view.projection)
            vallowed = np.zeros((n, Tv), dtype=bool)
            for t in range(T):
                vallowed[:, proj[t]] |= allowed[:, t]
            if urows.shape[1]:
                pos, vt = np.nonzero(vallowed)
                self._uni_keys[v].append((urows[pos] * Tv + vt[:, None]).ravel())
            if brows.shape[1]:
                W = Tv + 1
                for p in range(n + 1):
                    prev = [Tv] if p == 0 else np.flatnonzero(vallowed[p - 1])
                    cur = [Tv] if p == n else np.flatnonzero(vallowed[p])
                    pairs = (np.asarray(prev)[:, None] * W + np.asarray(cur)[None, :]).ravel()
                    self._bi_keys[v].append((brows[p][:, None] * W * W + pairs[None, :]).ravel())

    def freeze(self):
        """Activate cells seen at least ``cutoff`` times and assign ids."""
        if self.frozen:
            return self
        R, Rb = len(self.uni_rows), len(self.bi_rows)
        self.uni_mask, self.bi_mask = [], []
        for v, view in enumerate(self.views):
            Tv = len(view.tags)
            um = np.zeros((R + 1, Tv), dtype=bool)
            bm = np.zeros((Rb + 1, Tv + 1, Tv + 1), dtype=bool)
            for keys, mask in ((self._uni_keys[v], um), (self._bi_keys[v], bm)):
                if keys:
                    uniq, counts = np.unique(np.concatenate(keys), return_counts=True)
                    mask.reshape(-1)[uniq[counts >= self.cutoff]] = True
            self.uni_mask.append(um)
            self.bi_mask.append(bm)
        self._uni_keys = self._bi_keys = None
        self._finish()
        return self

    def _finish(self):
        self.frozen = True
        self.uni_pad = len(self.uni_rows)
        self.bi_pad = len(self.bi_rows)
        self.uni_ids, self.bi_ids = [], []
        offset = 0
        for um, bm in zip(self.uni_mask, self.bi_mask):
            for mask, out in ((um, self.uni_ids), (bm, self.bi_ids)):
                ids = np.full(mask.shape, -1, dtype=np.int64)
                k = int(mask.sum())
                ids[mask] = np.arange(offset, offset + k)
                offset += k
                out.append(ids)
        self.size = offset
        self._lookup = None

    @classmethod
    def from_strings(cls, views: Sequence[View], strings: Sequence[str], cutoff: int = 1):
        """Rebuild a frozen index from feature strings (as stored in a model file)."""
        index = cls(views, cutoff)
        by_name = {view.name: v for v, view in enumerate(index.views)}
        cells = []
        for s in strings:
            v, obs, tags = index.parse(s, by_name)
            view = index.views[v]
            if len(tags) == 1:
                row = index.uni_rows.setdefault(obs, len(index.uni_rows))
                cells.append((v, 0, row, (_tag_index(view, tags[0]),)))
            else:
                row = index.bi_rows.setdefault(obs, len(index.bi_rows))
                cells.append((v, 1, row, tuple(_tag_index(view, t) for t in tags)))
        R, Rb = len(index.uni_rows), len(index.bi_rows)
        index.uni_mask = [np.zeros((R + 1, len(vw.tags)), dtype=bool) for vw in index.views]
        index.bi_mask = [np.zeros((Rb + 1, len(vw.tags) + 1, len(vw.tags) + 1), dtype=bool)
                         for vw in index.views]
        for v, kind, row, tags in cells:
            mask = index.bi_mask[v] if kind else index.uni_mask[v]
            mask[(row,) + tags] = True
        index._uni_keys = index._bi_keys = None
        index._finish()
        return index

    def parse(self, s: str, by_name=None):
        """Split a feature string into (view number, observation, tag names)."""
        if by_name is None:
            by_name = {view.name: v for v, view in enumerate(self.views)}
        v = 0
        if len(self.views) > 1 or self.views[0].name:
            name, sep, s = s.partition("/")
            if not sep or name not in by_name:
                raise ValueError(f"feature string lacks a known view prefix: {s!r}")
            v = by_name[name]
        obs, sep, tagpart = s.rpartition("|")
        if not sep or not obs:
            raise ValueError(f"malformed feature string {s!r}")
        return v, obs, tuple(tagpart.split(">"))

    def encode(self, uni_obs, bi_obs) -> tuple[np.ndarray, np.ndarray]:
        """Row ids for a sentence's observations; unseen observations map to the zero pad row."""
        if not self.frozen:
            raise RuntimeError("index must be frozen before encoding")
        n = len(uni_obs)
        ur, br = self.uni_rows, self.bi_rows
        up, bp = self.uni_pad, self.bi_pad
        uids = np.array([[ur.get(o, up) for o in obs] for obs in uni_obs],
                        dtype=np.intp).reshape(n, -1)
        bids = np.array([[br.get(o, bp) for o in obs] for obs in bi_obs],
                        dtype=np.intp).reshape(n + 1, -1)
        return uids, bids

    def strings(self) -> list[str]:
        """All feature strings in id order."""
        uni_names = list(self.uni_rows)
        bi_names = list(self.bi_rows)
        out = []
        for v, view in enumerate(self.views):
            tags = view.tags
            for r, t in zip(*np.nonzero(self.uni_mask[v])):
                out.append(f"{view.prefix}{uni_names[r]}|{tags[t]}")
            prev_tags = list(view.tags) + [START_TAG]
            cur_tags = list(view.tags) + [END_TAG]
            for r, a, b in zip(*np.nonzero(self.bi_mask[v])):
                out.append(f"{view.prefix}{bi_names[r]}|{prev_tags[a]}>{cur_tags[b]}")
        return out

    def get(self, s: str) -> int | None:
        """Feature id of ``s``, or None when the feature is absent."""
        if self._lookup is None:
            self._lookup = {f: k for k, f in enumerate(self.strings())}
        return self._lookup.get(s)

    def __len__(self):
        return self.size

    def vectorize(self, strings) -> list[tuple[int, int]]:
        """Sorted ``(id, count)`` pairs for the present features among ``strings``."""
        counts = {}
        for s in strings:
            k = self.get(s)
            if k is not None:
                counts[k] = counts.get(k, 0) + 1
        return sorted(counts.items())


def _tag_index(view: View, tag: str) -> int:
    if tag in (START_TAG, END_TAG):
        return len(view.tags)
    return view.tags.index(tag)


def build_index(examples, views: Sequence[View], config: TemplateConfig,
                lexicon: Lexicon | None = None) -> FeatureIndex:
    """One pass over ``(LabeledSentence, guide tags or None)`` pairs, then freeze."""
    index = FeatureIndex(views, config.cutoff)
    for sent, guide in examples:
        uni, bi = observations(sent.chars, config, lexicon, guide)
        index.add(uni, bi, sent.labels)
    return index.freeze()
