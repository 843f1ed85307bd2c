"""ROUGE-1, ROUGE-2 and ROUGE-SU4 with multi-reference averaging.

Scoring protocol: lowercase, optionally Porter-stem, drop punctuation
tokens, truncate the candidate and every reference to the first
limit_words words, then count clipped n-gram matches. Per-reference
precision / recall / F1 are averaged arithmetically over the references.
ROUGE-SU4 pools skip bigrams (ordered pairs at positional distance <= 4)
with unigrams.

A percentile bootstrap over topic-level scores provides confidence
intervals for corpus runs.
"""

from __future__ import annotations

from collections import Counter
from typing import NamedTuple, Sequence

import numpy as np

from .stemmer import porter_stem

__all__ = [
    "Score",
    "ConfidenceInterval",
    "rouge_n",
    "rouge_su4",
    "bootstrap_ci",
    "DEFAULT_LIMIT_WORDS",
    "SKIP_DISTANCE",
]

DEFAULT_LIMIT_WORDS = 100
SKIP_DISTANCE = 4


class Score(NamedTuple):
    p: float
    r: float
    f: float


class ConfidenceInterval(NamedTuple):
    low: float
    high: float


def _is_punct_token(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def _normalize(tokens: Sequence[str], stem: bool, limit_words: int | None) -> list[str]:
    words = [t.lower() for t in tokens if not _is_punct_token(t)]
    if limit_words is not None:
        words = words[:limit_words]
    if stem:
        words = [porter_stem(w) for w in words]
    return words


def _ngrams(words: Sequence[str], n: int) -> Counter:
    return Counter(tuple(words[k:k + n]) for k in range(len(words) - n + 1))


def _skip_units(words: Sequence[str], max_distance: int | None) -> Counter:
    """Skip bigrams within the positional distance, pooled with unigrams."""
    units: Counter = Counter()
    for i in range(len(words)):
        units[(words[i],)] += 1
        top = len(words) if max_distance is None else min(len(words), i + max_distance + 1)
        for j in range(i + 1, top):
            units[(words[i], words[j])] += 1
    return units


def _prf(matches: int, cand_total: int, ref_total: int) -> Score:
    p = matches / cand_total if cand_total else 0.0
    r = matches / ref_total if ref_total else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return Score(p, r, f)


def _clipped_matches(cand: Counter, ref: Counter) -> int:
    return sum(min(count, ref[gram]) for gram, count in cand.items())


def _average(scores: list[Score]) -> Score:
    if not scores:
        return Score(0.0, 0.0, 0.0)
    n = len(scores)
    return Score(
        sum(s.p for s in scores) / n,
        sum(s.r for s in scores) / n,
        sum(s.f for s in scores) / n,
    )


def rouge_n(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    n: int,
    stem: bool = True,
    limit_words: int | None = DEFAULT_LIMIT_WORDS,
) -> Score:
    """ROUGE-N for n in {1, 2}, averaged over references."""
    if n not in (1, 2):
        raise ValueError("n must be 1 or 2")
    cand_words = _normalize(candidate, stem, limit_words)
    cand_grams = _ngrams(cand_words, n)
    cand_total = sum(cand_grams.values())
    per_ref = []
    for ref in references:
        ref_grams = _ngrams(_normalize(ref, stem, limit_words), n)
        per_ref.append(
            _prf(_clipped_matches(cand_grams, ref_grams), cand_total, sum(ref_grams.values()))
        )
    return _average(per_ref)


def rouge_su4(
    candidate: Sequence[str],
    references: Sequence[Sequence[str]],
    stem: bool = True,
    limit_words: int | None = DEFAULT_LIMIT_WORDS,
    max_distance: int | None = SKIP_DISTANCE,
) -> Score:
    """ROUGE-SU with the standard distance-4 window, averaged over references.

    Pass max_distance=None for unbounded skip bigrams.
    """
    cand_units = _skip_units(_normalize(candidate, stem, limit_words), max_distance)
    cand_total = sum(cand_units.values())
    per_ref = []
    for ref in references:
        ref_units = _skip_units(_normalize(ref, stem, limit_words), max_distance)
        per_ref.append(
            _prf(_clipped_matches(cand_units, ref_units), cand_total, sum(ref_units.values()))
        )
    return _average(per_ref)


def bootstrap_ci(
    per_topic_scores: Sequence[Score],
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> dict[str, ConfidenceInterval] | None:
    """Percentile bootstrap over topic-level means, per statistic.

    Returns {"p": (low, high), "r": ..., "f": ...}, or None with fewer
    than two topics (a notice is the caller's job). Deterministic for a
    fixed seed.
    """
    if len(per_topic_scores) < 2:
        return None
    rng = np.random.default_rng(seed)
    data = np.asarray(per_topic_scores, dtype=np.float64)  # (topics, 3)
    n = data.shape[0]
    idx = rng.integers(0, n, size=(n_resamples, n))
    means = data[idx].mean(axis=1)  # (n_resamples, 3)
    lo_q = 100.0 * (1.0 - level) / 2.0
    hi_q = 100.0 - lo_q
    out = {}
    for col, name in enumerate(("p", "r", "f")):
        lo, hi = np.percentile(means[:, col], [lo_q, hi_q])
        out[name] = ConfidenceInterval(float(lo), float(hi))
    return out
