"""Independent brute-force oracles used by unit and acceptance tests.

These deliberately avoid the implementation's code paths (no shared
helpers, no Counter where the implementation uses one) so agreement is
evidence, not tautology.
"""

from __future__ import annotations

import math
from itertools import combinations


def brute_force_lcs(a, b) -> int:
    """Longest common subsequence by enumerating every subsequence of the
    shorter side (longest first) and testing it against the other side."""
    short, long_ = (a, b) if len(a) <= len(b) else (b, a)

    def is_subsequence(sub, seq):
        it = iter(seq)
        return all(any(x == y for y in it) for x in sub)

    for size in range(len(short), 0, -1):
        for idx in combinations(range(len(short)), size):
            if is_subsequence([short[i] for i in idx], long_):
                return size
    return 0


def oracle_rouge_n(cand, ref, n) -> tuple[float, float, float]:
    """Multiset n-gram overlap recomputed with plain dicts and greedy
    matching (equivalent to clipped counts)."""
    cand_grams = [tuple(cand[i : i + n]) for i in range(len(cand) - n + 1)]
    ref_grams = [tuple(ref[i : i + n]) for i in range(len(ref) - n + 1)]
    if not cand_grams or not ref_grams:
        return 0.0, 0.0, 0.0
    remaining: dict = {}
    for gram in ref_grams:
        remaining[gram] = remaining.get(gram, 0) + 1
    overlap = 0
    for gram in cand_grams:
        if remaining.get(gram, 0) > 0:
            remaining[gram] -= 1
            overlap += 1
    precision = overlap / len(cand_grams)
    recall = overlap / len(ref_grams)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def oracle_rouge_l(cand, ref) -> tuple[float, float, float]:
    if not cand or not ref:
        return 0.0, 0.0, 0.0
    lcs = brute_force_lcs(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def brute_force_tfidf(frame_docs, all_docs) -> dict[str, float]:
    """Summed tf*idf with the global document frequency, no Counter."""
    scores: dict[str, float] = {}
    n = len(all_docs)
    for doc in frame_docs:
        for word in set(doc):
            df = sum(1 for d in all_docs if word in d)
            idf = math.log(n / df)
            scores[word] = scores.get(word, 0.0) + doc.count(word) * idf
    return scores


def brute_force_jaccard_argmax(own_entities, candidates) -> str:
    """(id of) the candidate with maximal case-folded Jaccard, smallest id
    on ties; recomputed without the implementation's helpers."""
    own = {e.casefold() for e in own_entities}
    best_id = None
    best_score = -1.0
    for candidate in sorted(candidates, key=lambda c: c.id):
        other = {e.casefold() for e in candidate.entities}
        union = own | other
        score = (len(own & other) / len(union)) if union else 0.0
        if score > best_score:
            best_score = score
            best_id = candidate.id
    return best_id
