"""Character accuracy and word precision / recall / F1."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .corpus import (
    CorpusFormatError,
    SpanSegmentation,
    spans_to_tags,
    split_token,
)


def char_accuracy(gold: Sequence[Sequence[str]], pred: Sequence[Sequence[str]]) -> float:
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    correct = total = 0
    for k, (g, p) in enumerate(zip(gold, pred)):
        if len(g) != len(p):
            raise ValueError(f"sentence {k + 1}: {len(g)} gold tags but {len(p)} predicted")
        correct += sum(a == b for a, b in zip(g, p))
        total += len(g)
    return correct / total if total else 0.0


@dataclass(frozen=True)
class PRF:
    gold: int
    pred: int
    correct: int

    @property
    def precision(self):
        return self.correct / self.pred if self.pred else 0.0

    @property
    def recall(self):
        return self.correct / self.gold if self.gold else 0.0

    @property
    def f1(self):
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r > 0 else 0.0

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))

    def __add__(self, other):
        return PRF(self.gold + other.gold, self.pred + other.pred, self.correct + other.correct)


def _units(seg: SpanSegmentation, labeled: bool):
    if labeled:
        labels = seg.labels or (None,) * len(seg)
        return {(a, b, lab) for (a, b), lab in zip(seg.spans, labels)}
    return set(seg.spans)


def sentence_prf(gold: SpanSegmentation, pred: SpanSegmentation, labeled: bool = False) -> PRF:
    if gold.n != pred.n:
        raise ValueError(f"segmentations cover {gold.n} and {pred.n} characters")
    g, p = _units(gold, labeled), _units(pred, labeled)
    return PRF(len(g), len(p), len(g & p))


def word_prf(gold: Sequence[SpanSegmentation], pred: Sequence[SpanSegmentation],
             labeled: bool = False) -> PRF:
    """Micro-averaged span P/R/F1; with ``labeled`` the POS label must match too."""
    if len(gold) != len(pred):
        raise ValueError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    total = PRF(0, 0, 0)
    for g, p in zip(gold, pred):
        total = total + sentence_prf(g, p, labeled)
    return total


@dataclass
class ScoreReport:
    prf: PRF
    accuracy: float
    sentences: list[PRF]

    def format(self) -> str:
        p, r, f = self.prf
        return "\n".join([
            f"sentences\t{len(self.sentences)}",
            f"gold words\t{self.prf.gold}",
            f"predicted words\t{self.prf.pred}",
            f"correct words\t{self.prf.correct}",
            f"Acc {100 * self.accuracy:.2f}  P {100 * p:.2f}  R {100 * r:.2f}  F {100 * f:.2f}",
            f"#score acc={self.accuracy!r} p={p!r} r={r!r} f={f!r} "
            f"gold={self.prf.gold} pred={self.prf.pred} correct={self.prf.correct}",
        ])


def _read_lines(path, joint):
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            tokens = line.split()
            if not tokens:
                continue
            words, labels = [], []
            for tok in tokens:
                w, pos = split_token(tok, joint, path, lineno)
                words.append(w)
                labels.append(pos)
            out.append((lineno, words, labels if joint else None))
    return out


def score_segmentations(gold_lines, pred_lines, labeled=False) -> ScoreReport:
    """Score aligned ``(words, labels)`` sentences; characters must agree."""
    if len(gold_lines) != len(pred_lines):
        raise ValueError(f"{len(gold_lines)} gold sentences but {len(pred_lines)} predicted")
    per, gold_tags, pred_tags = [], [], []
    for k, ((gw, gl), (pw, pl)) in enumerate(zip(gold_lines, pred_lines)):
        if "".join(gw) != "".join(pw):
            raise ValueError(f"sentence {k + 1}: gold and predicted characters differ")
        gs = SpanSegmentation.from_words(gw, gl)
        ps = SpanSegmentation.from_words(pw, pl)
        per.append(sentence_prf(gs, ps, labeled))
        gold_tags.append(spans_to_tags(gs))
        pred_tags.append(spans_to_tags(ps))
    total = PRF(0, 0, 0)
    for s in per:
        total = total + s
    return ScoreReport(total, char_accuracy(gold_tags, pred_tags), per)


def score_files(gold_path, pred_path, joint: bool = False) -> ScoreReport:
    gold = _read_lines(gold_path, joint)
    pred = _read_lines(pred_path, joint)
    if len(gold) != len(pred):
        raise CorpusFormatError(f"{len(gold)} gold sentences but {len(pred)} predicted", pred_path)
    for (gl, gw, _), (pl, pw, _) in zip(gold, pred):
        if "".join(gw) != "".join(pw):
            raise CorpusFormatError(f"characters differ from gold line {gl}", pred_path, pl)
    return score_segmentations([(w, l) for _, w, l in gold], [(w, l) for _, w, l in pred], joint)
