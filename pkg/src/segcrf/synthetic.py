"""Synthetic segmented corpora for desk-scale experiments."""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .corpus import Dataset, TagScheme, labeled_from_words

CJK_BASE = 0x4E00


def make_vocabulary(rng: np.random.Generator, size: int = 300, min_len: int = 1,
                    max_len: int = 4, alphabet_size: int = 600) -> list[str]:
    """Distinct words over a CJK alphabet, lengths uniform in ``[min_len, max_len]``."""
    alphabet = [chr(CJK_BASE + k) for k in rng.choice(5000, alphabet_size, replace=False)]
    vocab, seen = [], set()
    while len(vocab) < size:
        length = int(rng.integers(min_len, max_len + 1))
        w = "".join(alphabet[k] for k in rng.integers(0, alphabet_size, length))
        if w not in seen:
            seen.add(w)
            vocab.append(w)
    return vocab


def zipf_weights(size: int, exponent: float = 1.0) -> np.ndarray:
    w = 1.0 / np.arange(1, size + 1) ** exponent
    return w / w.sum()


def sample_sentences(rng: np.random.Generator, vocab: Sequence[str], count: int,
                     min_words: int = 4, max_words: int = 12, exponent: float = 1.0) -> list[list[str]]:
    p = zipf_weights(len(vocab), exponent)
    out = []
    for _ in range(count):
        k = int(rng.integers(min_words, max_words + 1))
        out.append([vocab[j] for j in rng.choice(len(vocab), k, p=p)])
    return out


def merge_single_char_words(words: Sequence[str]) -> list[str]:
    """A second standard: adjacent single-character words are joined pairwise, left to right."""
    out, k = [], 0
    while k < len(words):
        if len(words[k]) == 1 and k + 1 < len(words) and len(words[k + 1]) == 1:
            out.append(words[k] + words[k + 1])
            k += 2
        else:
            out.append(words[k])
            k += 1
    return out


def to_dataset(name: str, sentences: Sequence[Sequence[str]], scheme: TagScheme | None = None) -> Dataset:
    scheme = scheme or TagScheme.bies()
    return Dataset(name, [labeled_from_words(ws, scheme) for ws in sentences], scheme)
