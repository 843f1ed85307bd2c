"""End-to-end orchestration: enumerate, score, filter, featurize, select.

The stages communicate through plain JSONL files (see the owning modules
for each schema), so any stage can be rerun or swapped in isolation. This
module holds the in-memory composition used by the CLI.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Topic
from .dpp import QualityModel, build_L, map_select, quality_scores
from .features import PyramidFeaturizer, assemble_features, similarity_matrix
from .scores import ScoreRequest, ScoreSource
from .segment import (
    DEFAULT_MAX_PER_SENTENCE,
    DEFAULT_MIN_WORDS,
    CandidateSegment,
    ParseTree,
    enumerate_candidates,
    extract_tree_segments,
    quartile_filter,
)

__all__ = [
    "Selection",
    "generate_candidates",
    "score_candidates",
    "filter_and_rank",
    "tree_candidates",
    "select_summary",
    "write_selections",
    "read_selections",
    "segment_stats",
]


def generate_candidates(
    topic: Topic, min_words: int = DEFAULT_MIN_WORDS
) -> list[CandidateSegment]:
    """Every unscored candidate span of the topic, in document order."""
    out: list[CandidateSegment] = []
    next_id = 0
    for doc in topic.documents:
        for sentence in doc.sentences:
            for chunk_index, chunk in enumerate(sentence.chunks):
                for i, j in enumerate_candidates(sentence, chunk, min_words):
                    words = sum(
                        1 for t in sentence.tokens[i:j + 1] if not t.is_punct
                    )
                    out.append(
                        CandidateSegment(
                            segment_id=next_id,
                            topic_id=topic.topic_id,
                            doc_id=doc.doc_id,
                            sentence_index=sentence.position,
                            token_range=(i, j),
                            word_count=words,
                            chunk_index=chunk_index,
                        )
                    )
                    next_id += 1
    return out


def score_candidates(
    topic: Topic, candidates: Sequence[CandidateSegment], source: ScoreSource
) -> list[CandidateSegment]:
    """Fill p_start / p_end / p_self through the scoring gateway."""
    by_doc = {doc.doc_id: doc for doc in topic.documents}
    requests = []
    for c in candidates:
        sentence = by_doc[c.doc_id].sentences[c.sentence_index]
        requests.append(
            ScoreRequest(
                request_id=str(c.segment_id),
                sentence_tokens=tuple(t.text for t in sentence.tokens),
                span=c.token_range,
                doc_id=c.doc_id,
                sentence_index=c.sentence_index,
            )
        )
    responses = source.score_spans(requests)
    return [
        c.with_scores(resp.p_start, resp.p_end)
        for c, resp in zip(candidates, responses)
    ]


def filter_and_rank(
    candidates: Sequence[CandidateSegment],
    max_per_sentence: int = DEFAULT_MAX_PER_SENTENCE,
) -> list[CandidateSegment]:
    """Per-chunk quartile filter, then keep the top spans of each sentence.

    Candidates sharing a sentence but different chunks compete only after
    filtering. Output is in document order, best-first within a sentence.
    """
    by_chunk: dict[tuple[str, int, int], list[CandidateSegment]] = {}
    chunk_order: list[tuple[str, int, int]] = []
    for c in candidates:
        key = (c.doc_id, c.sentence_index, c.chunk_index)
        if key not in by_chunk:
            by_chunk[key] = []
            chunk_order.append(key)
        by_chunk[key].append(c)

    survivors_by_sentence: dict[tuple[str, int], list[CandidateSegment]] = {}
    sentence_order: list[tuple[str, int]] = []
    for key in chunk_order:
        survivors = quartile_filter(by_chunk[key])
        s_key = (key[0], key[1])
        if s_key not in survivors_by_sentence:
            survivors_by_sentence[s_key] = []
            sentence_order.append(s_key)
        survivors_by_sentence[s_key].extend(survivors)

    out: list[CandidateSegment] = []
    for s_key in sentence_order:
        pool = survivors_by_sentence[s_key]
        pool.sort(key=lambda c: (-c.p_self, c.start, c.span_length))
        out.extend(pool[:max_per_sentence])
    return out


def tree_candidates(
    topic: Topic,
    parses: dict[tuple[str, int], ParseTree],
    min_words: int = DEFAULT_MIN_WORDS,
    max_per_sentence: int = DEFAULT_MAX_PER_SENTENCE,
) -> list[CandidateSegment]:
    """Baseline candidates from constituency parse subtrees.

    Sentences without a parse in the sidecar are skipped. Tree candidates
    carry no boundary probabilities.
    """
    out: list[CandidateSegment] = []
    next_id = 0
    for doc in topic.documents:
        for sentence in doc.sentences:
            tree = parses.get((doc.doc_id, sentence.position))
            if tree is None:
                continue
            for i, j in extract_tree_segments(tree, sentence, min_words, max_per_sentence):
                words = sum(1 for t in sentence.tokens[i:j + 1] if not t.is_punct)
                out.append(
                    CandidateSegment(
                        segment_id=next_id,
                        topic_id=topic.topic_id,
                        doc_id=doc.doc_id,
                        sentence_index=sentence.position,
                        token_range=(i, j),
                        word_count=words,
                    )
                )
                next_id += 1
    return out


@dataclass(frozen=True)
class Selection:
    topic_id: str
    segments: tuple[CandidateSegment, ...]

    @property
    def word_total(self) -> int:
        return sum(c.word_count for c in self.segments)


# A selected item keeps a positive log-det gain while its quality squared
# beats the inverse of its residual diversity; the margin tolerates roughly
# a 75 percent similarity discount for budget-count items.
CALIBRATION_MARGIN = 2.0


def calibrate_quality(q: np.ndarray, target_count: int) -> np.ndarray:
    """Uniformly rescale quality so a budget's worth of items clears gain one.

    Maximum-likelihood training matches the expected set size to the handful
    of labeled segments per topic, which can push every single-item gain
    negative and starve the budgeted greedy selection. Scaling all q by one
    positive constant preserves their ordering and the similarity structure;
    the constant is chosen so the target_count-th largest quality lands at
    CALIBRATION_MARGIN, leaving the word budget reachable whenever enough
    diverse candidates exist.
    """
    k = min(max(int(target_count), 1), len(q))
    pivot = float(np.sort(q)[len(q) - k])
    return q * (CALIBRATION_MARGIN / pivot)


def select_summary(
    topic: Topic,
    candidates: Sequence[CandidateSegment],
    model: QualityModel,
    featurizer: PyramidFeaturizer,
    budget_words: int | None = None,
    calibrate: bool = True,
) -> Selection:
    """Score candidate quality, build the ensemble, and pick greedily."""
    budget = budget_words if budget_words is not None else topic.budget_words
    if not candidates:
        return Selection(topic.topic_id, ())
    feats = assemble_features(topic, candidates, featurizer)
    if feats.shape[1] != model.feature_dim:
        raise ValueError(
            f"model expects {model.feature_dim} features, got {feats.shape[1]}"
        )
    seg_tokens = _segment_token_lists(topic, candidates)
    S = similarity_matrix(seg_tokens, featurizer.tfidf)
    q = quality_scores(model.theta, feats)
    if calibrate:
        mean_words = sum(c.word_count for c in candidates) / len(candidates)
        q = calibrate_quality(q, round(budget / mean_words))
    L = build_L(q, S)
    chosen = map_select(L, [c.word_count for c in candidates], budget)
    return Selection(topic.topic_id, tuple(candidates[k] for k in chosen))


def _segment_token_lists(
    topic: Topic, candidates: Sequence[CandidateSegment]
) -> list[list[str]]:
    by_doc = {doc.doc_id: doc for doc in topic.documents}
    out = []
    for c in candidates:
        sentence = by_doc[c.doc_id].sentences[c.sentence_index]
        out.append([t.text for t in sentence.tokens[c.token_range[0]:c.token_range[1] + 1]])
    return out


def write_selections(selections: Sequence[Selection], fh) -> None:
    for sel in selections:
        fh.write(
            json.dumps(
                {
                    "topic_id": sel.topic_id,
                    "segments": [
                        {
                            "doc_id": c.doc_id,
                            "sentence_index": c.sentence_index,
                            "i": c.token_range[0],
                            "j": c.token_range[1],
                        }
                        for c in sel.segments
                    ],
                    "word_total": sel.word_total,
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def read_selections(path: str) -> dict[str, list[dict]]:
    out: dict[str, list[dict]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            out[record["topic_id"]] = record["segments"]
    return out


def segment_stats(
    topics: Sequence[Topic], candidates_by_topic: dict[str, list[CandidateSegment]]
) -> dict:
    """Corpus statistics: words per segment, segments per sentence, totals."""
    n_segments = 0
    n_words = 0
    n_sentences = 0
    for topic in topics:
        n_sentences += sum(len(doc.sentences) for doc in topic.documents)
        for c in candidates_by_topic.get(topic.topic_id, []):
            n_segments += 1
            n_words += c.word_count
    return {
        "topics": len(topics),
        "sentences": n_sentences,
        "segments": n_segments,
        "words_per_segment": n_words / n_segments if n_segments else 0.0,
        "segments_per_sentence": n_segments / n_sentences if n_sentences else 0.0,
        "segments_per_topic": n_segments / len(topics) if topics else 0.0,
    }
