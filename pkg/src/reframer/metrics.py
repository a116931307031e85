"""Automatic evaluation: ROUGE, frame vocabularies, overlap, harmonic mean.

ROUGE-N uses clipped n-gram overlap, ROUGE-L the LCS; the entity-masked
mode removes every token that belongs to an entity surface from both
sides before scoring (and skips R2, which entity removal makes
unreliable). Frame vocabularies rank words by summed tf*idf with a
global idf over all frames' sentence-documents.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence

from .frames import Frame
from .textseg import tokenize


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float
    variant: str  # "R1" | "R2" | "RL"
    entity_masked: bool = False


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngrams(tokens: Sequence[str], n: int) -> list[tuple[str, ...]]:
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(
    candidate: Sequence[str],
    reference: Sequence[str],
    n: int,
    entity_masked: bool = False,
) -> RougeScore:
    """Clipped n-gram overlap; a side shorter than n scores all zeros."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    variant = f"R{n}"
    cand = _ngrams(candidate, n)
    ref = _ngrams(reference, n)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0, variant, entity_masked)
    cand_counts = Counter(cand)
    ref_counts = Counter(ref)
    overlap = sum(min(count, ref_counts[gram]) for gram, count in cand_counts.items())
    precision = overlap / len(cand)
    recall = overlap / len(ref)
    return RougeScore(precision, recall, _f1(precision, recall), variant, entity_masked)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        cur = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                cur.append(prev[j - 1] + 1)
            else:
                cur.append(max(prev[j], cur[j - 1]))
        prev = cur
    return prev[len(b)]


def rouge_l(
    candidate: Sequence[str],
    reference: Sequence[str],
    entity_masked: bool = False,
) -> RougeScore:
    """LCS-based ROUGE; an empty side scores all zeros."""
    if not candidate or not reference:
        return RougeScore(0.0, 0.0, 0.0, "RL", entity_masked)
    lcs = _lcs_length(candidate, reference)
    precision = lcs / len(candidate)
    recall = lcs / len(reference)
    return RougeScore(precision, recall, _f1(precision, recall), "RL", entity_masked)


def strip_entities(tokens: Sequence[str], entities: Iterable[str]) -> list[str]:
    """Drop every token that case-folds to a token of any entity surface."""
    entity_tokens = {
        tok.casefold() for surface in entities for tok in tokenize(surface)
    }
    if not entity_tokens:
        return list(tokens)
    return [t for t in tokens if t.casefold() not in entity_tokens]


def harmonic_mean(a: float, b: float) -> float:
    """2ab/(a+b); zero when both are zero. Negative inputs are invalid."""
    if a < 0 or b < 0:
        raise ValueError(f"harmonic_mean needs non-negative inputs, got {a}, {b}")
    if a + b == 0:
        return 0.0
    return 2 * a * b / (a + b)


class VocabularyError(ValueError):
    """A frame without documents cannot produce a vocabulary."""


@dataclass(frozen=True)
class FrameVocabulary:
    frame: Frame
    entries: tuple[tuple[str, float], ...]  # (word, score), score non-increasing

    @property
    def words(self) -> frozenset[str]:
        return frozenset(w for w, _ in self.entries)


def vocabulary_tokens(text: str) -> list[str]:
    """Lowercase alphabetic tokens; no stopword removal."""
    return [t.lower() for t in tokenize(text) if t.isalpha()]


def build_frame_vocabulary(
    frame: Frame,
    frame_documents: Sequence[Sequence[str]],
    all_documents: Sequence[Sequence[str]],
    k: int = 100,
    aggregate: str = "sum",
) -> FrameVocabulary:
    """Top-k words of a frame by tf*idf.

    Documents are token lists (one per sentence); idf(w) = ln(N/df(w))
    over the global document set of all frames, so cross-frame words are
    scored comparably. A word's frame score aggregates tf(w,d)*idf(w)
    over the frame's documents ("sum", or "max" of the per-document
    products). Words occurring in every document (idf 0) are never
    ranked. Ties break lexicographically.
    """
    if not frame_documents:
        raise VocabularyError(f"frame {frame.value!r} has no documents")
    if aggregate not in ("sum", "max"):
        raise ValueError(f"unknown aggregation: {aggregate!r}")

    n_docs = len(all_documents)
    df: Counter[str] = Counter()
    for doc in all_documents:
        df.update(set(doc))

    scores: dict[str, float] = {}
    for doc in frame_documents:
        tf = Counter(doc)
        for word, count in tf.items():
            idf = math.log(n_docs / df[word])
            contribution = count * idf
            if aggregate == "sum":
                scores[word] = scores.get(word, 0.0) + contribution
            else:
                scores[word] = max(scores.get(word, 0.0), contribution)

    ranked = sorted(
        ((w, s) for w, s in scores.items() if s > 0),
        key=lambda item: (-item[1], item[0]),
    )
    return FrameVocabulary(frame=frame, entries=tuple(ranked[:k]))


def framing_overlap(text: str, vocabulary: FrameVocabulary) -> float:
    """Share of token positions whose lowercase form is a vocabulary word."""
    tokens = tokenize(text)
    if not tokens:
        return 0.0
    words = vocabulary.words
    hits = sum(1 for t in tokens if t.lower() in words)
    return hits / len(tokens)


def corpus_overlap(texts: Iterable[str], vocabulary: FrameVocabulary) -> float:
    """Micro-averaged overlap: vocabulary hits over all token positions."""
    words = vocabulary.words
    hits = 0
    total = 0
    for text in texts:
        tokens = tokenize(text)
        total += len(tokens)
        hits += sum(1 for t in tokens if t.lower() in words)
    return hits / total if total else 0.0


def mean(values: Sequence[float]) -> float:
    return sum(values) / len(values) if values else 0.0


def macro_rouge(scores: Iterable[RougeScore]) -> float:
    """Mean F1 over per-case scores (the table cells)."""
    values = [s.f1 for s in scores]
    return mean(values)


def overlap_delta_pp(after: float, before: float) -> float:
    """Delta in percentage points between two proportions."""
    return (after - before) * 100.0


def round_half_up(value: float, digits: int = 2) -> float:
    """Decimal half-up rounding, applied only when rendering."""
    quantum = Decimal(1).scaleb(-digits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


def render_overlap_cell(proportion: float, delta_pp: float) -> str:
    """Table cell like "10% (-2)": whole percent plus signed pp delta."""
    pct = int(round_half_up(proportion * 100.0, 0))
    delta = int(round_half_up(delta_pp, 0))
    sign = "+" if delta >= 0 else "-"
    return f"{pct}% ({sign}{abs(delta)})"
