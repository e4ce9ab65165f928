"""External word dictionary and its maximum-length span queries.

Positions are 1-based throughout this module: ``f_begin(x, 1, D)`` asks
about the first character of ``x``.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_CAP = 6


class LexiconError(ValueError):
    pass


class Lexicon:
    """An immutable word set supporting begin/inside/end span queries."""

    def __init__(self, words: Iterable[str] = ()):
        cleaned = set()
        for w in words:
            if not w:
                continue
            if any(c.isspace() for c in w):
                raise LexiconError(f"lexicon word contains whitespace: {w!r}")
            cleaned.add(w)
        self.words = frozenset(cleaned)
        self.max_len = max((len(w) for w in self.words), default=0)

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return word in self.words

    def __repr__(self):
        return f"Lexicon({len(self)} words, max_len={self.max_len})"

    def span_lengths(self, x: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """F_B, F_I and F_E for every position of ``x`` (0-based arrays).

        One pass over all substrings of length <= max_len, so each position
        costs O(max_len) lookups on average.
        """
        n = len(x)
        begin = np.zeros(n, dtype=np.int64)
        inside = np.zeros(n, dtype=np.int64)
        end = np.zeros(n, dtype=np.int64)
        words = self.words
        for s in range(n):
            for m in range(1, min(self.max_len, n - s) + 1):
                if x[s:s + m] not in words:
                    continue
                e = s + m - 1
                if m > begin[s]:
                    begin[s] = m
                if m > end[e]:
                    end[e] = m
                if m > 2:
                    seg = inside[s + 1:e]
                    np.maximum(seg, m, out=seg)
        return begin, inside, end


def _check_position(x: str, i: int):
    if not 1 <= i <= len(x):
        raise IndexError(f"position {i} is outside 1..{len(x)}")


def f_begin(x: str, i: int, D: Lexicon) -> int:
    """Length of the longest dictionary word starting at character ``i``, else 0."""
    _check_position(x, i)
    s = i - 1
    for m in range(min(D.max_len, len(x) - s), 0, -1):
        if x[s:s + m] in D.words:
            return m
    return 0


def f_end(x: str, i: int, D: Lexicon) -> int:
    """Length of the longest dictionary word ending at character ``i``, else 0."""
    _check_position(x, i)
    for m in range(min(D.max_len, i), 0, -1):
        if x[i - m:i] in D.words:
            return m
    return 0


def f_inside(x: str, i: int, D: Lexicon) -> int:
    """Length of the longest dictionary word with character ``i`` strictly inside it."""
    _check_position(x, i)
    s = i - 1
    for m in range(min(D.max_len, len(x)), 2, -1):
        # j characters follow position i inside the word, 0 < j < m - 1
        for j in range(1, m - 1):
            a = s - (m - j - 1)
            if a < 0 or s + j >= len(x):
                continue
            if x[a:s + j + 1] in D.words:
                return m
    return 0


def render_length(m, cap: int = DEFAULT_CAP) -> str:
    return f"{cap}+" if m > cap else str(int(m))


def load_lexicon(path) -> Lexicon:
    """Load a UTF-8 word list, one word per line.

    Blank lines and duplicates are dropped.  Lines carrying extra
    whitespace-separated columns (frequency lists) keep only the first one.
    """
    path = Path(path)
    raw = path.read_bytes()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise LexiconError(f"{path}: invalid UTF-8 at byte offset {exc.start}") from None
    words = []
    for line in text.splitlines():
        fields = line.split()
        if fields:
            words.append(fields[0])
    lex = Lexicon(words)
    logger.info("loaded %d words from %s (max length %d)", len(lex), path, lex.max_len)
    return lex
