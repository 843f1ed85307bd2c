"""Ground-truth label construction by two-step greedy bigram matching.

Human segment annotations are unavailable, so labels are approximated:
first greedily pick the document sentences maximizing the bigram F-score
of the growing selection against the reference summaries, then within
each picked sentence keep the single candidate segment scoring highest on
its own. Both steps use the same scoring protocol as evaluation
(stemming, budget truncation).
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from typing import Sequence

from .corpus import Sentence, Topic
from .rouge import rouge_n
from .segment import CandidateSegment

__all__ = [
    "OracleResult",
    "greedy_sentence_select",
    "best_segment_per_sentence",
    "build_oracle_labels",
    "write_labels",
    "read_labels",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class OracleResult:
    topic_id: str
    selected_sentences: tuple[tuple[str, int], ...]
    selected_segments: tuple[CandidateSegment, ...]
    achieved_r2_f: float
    r2_trace: tuple[float, ...]
    stop_reason: str  # "budget" or "no_improvement"


def _sentence_tokens(sentence: Sentence) -> list[str]:
    return [t.text for t in sentence.tokens]


def _selection_score(
    selection_tokens: list[str], references: list[list[str]], budget: int
) -> float:
    return rouge_n(selection_tokens, references, n=2, stem=True, limit_words=budget).f


def greedy_sentence_select(
    topic: Topic, budget_words: int | None = None
) -> tuple[list[Sentence], list[float], str]:
    """Greedily pick sentences maximizing bigram F of the selection.

    Returns the picked sentences in selection order, the score trace, and
    the stop reason. Stops at the first of: the word budget is covered, or
    no remaining sentence strictly improves the score. Ties keep document
    order.
    """
    budget = budget_words if budget_words is not None else topic.budget_words
    references = topic.reference_token_texts()
    pool = list(topic.sentences())
    picked: list[Sentence] = []
    picked_tokens: list[str] = []
    trace: list[float] = []
    best_score = 0.0
    stop_reason = "no_improvement"

    while pool:
        word_total = sum(s.word_count() for s in picked)
        if word_total >= budget:
            stop_reason = "budget"
            break
        best_idx = -1
        for k, sentence in enumerate(pool):
            score = _selection_score(
                picked_tokens + _sentence_tokens(sentence), references, budget
            )
            if score > best_score:
                best_score = score
                best_idx = k
        if best_idx < 0:
            stop_reason = "no_improvement"
            break
        chosen = pool.pop(best_idx)
        picked.append(chosen)
        picked_tokens.extend(_sentence_tokens(chosen))
        trace.append(best_score)
    return picked, trace, stop_reason


def best_segment_per_sentence(
    sentence: Sentence,
    candidates: Sequence[CandidateSegment],
    references: list[list[str]],
    budget_words: int = 100,
) -> CandidateSegment:
    """The candidate of this sentence with the highest own bigram F-score.

    Ties prefer the longer segment, then the earlier start.
    """
    if not candidates:
        raise ValueError("sentence has no candidate segments")
    tokens = _sentence_tokens(sentence)
    best = None
    best_key = None
    for c in candidates:
        seg_tokens = tokens[c.token_range[0]:c.token_range[1] + 1]
        f = rouge_n(seg_tokens, references, n=2, stem=True, limit_words=budget_words).f
        key = (-f, -c.word_count, c.start)
        if best_key is None or key < best_key:
            best_key = key
            best = c
    return best


def build_oracle_labels(
    topic: Topic, candidates: Sequence[CandidateSegment]
) -> OracleResult:
    """Run both steps and enforce the word budget on the labeled segments."""
    by_sentence: dict[tuple[str, int], list[CandidateSegment]] = {}
    for c in candidates:
        by_sentence.setdefault((c.doc_id, c.sentence_index), []).append(c)

    picked, trace, stop_reason = greedy_sentence_select(topic)
    references = topic.reference_token_texts()

    segments: list[CandidateSegment] = []
    sentence_keys: list[tuple[str, int]] = []
    word_total = 0
    for sentence in picked:
        key = (sentence.doc_id, sentence.position)
        pool = by_sentence.get(key)
        if not pool:
            log.warning(
                "topic %s: no candidates for %s sentence %d; skipped",
                topic.topic_id, sentence.doc_id, sentence.position,
            )
            continue
        best = best_segment_per_sentence(sentence, pool, references, topic.budget_words)
        if word_total + best.word_count > topic.budget_words:
            log.debug(
                "topic %s: dropping label %s to stay under the %d-word budget",
                topic.topic_id, best.segment_id, topic.budget_words,
            )
            continue
        segments.append(best)
        sentence_keys.append(key)
        word_total += best.word_count

    return OracleResult(
        topic_id=topic.topic_id,
        selected_sentences=tuple(sentence_keys),
        selected_segments=tuple(segments),
        achieved_r2_f=trace[-1] if trace else 0.0,
        r2_trace=tuple(trace),
        stop_reason=stop_reason,
    )


def write_labels(results: Sequence[OracleResult], fh) -> None:
    for res in results:
        fh.write(
            json.dumps(
                {
                    "topic_id": res.topic_id,
                    "segments": [
                        {
                            "doc_id": c.doc_id,
                            "sentence_index": c.sentence_index,
                            "i": c.token_range[0],
                            "j": c.token_range[1],
                        }
                        for c in res.selected_segments
                    ],
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def read_labels(path: str) -> dict[str, list[dict]]:
    """Map topic_id to its labeled segment span records."""
    out: dict[str, list[dict]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            out[record["topic_id"]] = record["segments"]
    return out
