"""Candidate segment generation.

Two generators are provided. The probability-driven one over-generates every
consecutive word span of a chunk, scores span boundaries, and keeps spans
whose start and end probabilities both reach the upper quartile of their
chunk. The baseline one reads externally produced constituency parses and
emits the spans governed by subtree nodes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .corpus import Sentence, Chunk, CorpusError

__all__ = [
    "CandidateSegment",
    "ParseTree",
    "TreeAlignmentError",
    "enumerate_candidates",
    "quartile_filter",
    "parse_bracketed",
    "extract_tree_segments",
    "load_parse_sidecar",
    "write_candidates",
    "read_candidates",
]

DEFAULT_MIN_WORDS = 5
DEFAULT_MAX_PER_SENTENCE = 4


@dataclass(frozen=True)
class CandidateSegment:
    """One candidate span x_{i:j} of a sentence, with boundary probabilities.

    ``token_range`` holds inclusive token indices into the parent sentence.
    ``p_start`` / ``p_end`` estimate how plausibly the span begins and ends a
    miniature sentence; ``p_self`` is their arithmetic mean. Probabilities
    are None until a scorer has filled them in (and stay None for tree
    segments, which are never probability-filtered).
    """

    segment_id: int
    topic_id: str
    doc_id: str
    sentence_index: int
    token_range: tuple[int, int]
    word_count: int
    chunk_index: int = 0
    p_start: float | None = None
    p_end: float | None = None
    p_self: float | None = None

    @property
    def start(self) -> int:
        return self.token_range[0]

    @property
    def end(self) -> int:
        return self.token_range[1]

    @property
    def span_length(self) -> int:
        return self.token_range[1] - self.token_range[0] + 1

    def with_scores(self, p_start: float, p_end: float) -> "CandidateSegment":
        return replace(
            self, p_start=p_start, p_end=p_end, p_self=(p_start + p_end) / 2.0
        )


def enumerate_candidates(
    sentence: Sentence, chunk: Chunk, min_words: int = DEFAULT_MIN_WORDS
) -> list[tuple[int, int]]:
    """Every consecutive word span of the chunk with >= min_words words.

    Spans start and end on word tokens; interior punctuation is allowed and
    does not count toward the word total. Returned in (start asc, end asc)
    order. A chunk of N words yields (N-4)(N-3)/2 spans at the default
    minimum of five words.
    """
    if min_words < 1:
        raise ValueError("min_words must be >= 1")
    words = [
        k
        for k in range(chunk.first, chunk.last + 1)
        if not sentence.tokens[k].is_punct
    ]
    spans = []
    n = len(words)
    for a in range(n):
        for b in range(a + min_words - 1, n):
            spans.append((words[a], words[b]))
    return spans


def _q3_nearest_rank(values: Sequence[float]) -> float:
    """Upper quartile as the ceil(0.75 n)-th order statistic."""
    ordered = sorted(values)
    rank = math.ceil(0.75 * len(ordered))
    return ordered[rank - 1]


def quartile_filter(candidates: list[CandidateSegment]) -> list[CandidateSegment]:
    """Drop candidates whose start or end probability falls below its Q3.

    The quartiles are computed over the given population (one chunk's
    candidates). Survivors are ordered by p_self descending, ties broken by
    earlier start, then shorter span.
    """
    if not candidates:
        return []
    q3_start = _q3_nearest_rank([c.p_start for c in candidates])
    q3_end = _q3_nearest_rank([c.p_end for c in candidates])
    survivors = [
        c for c in candidates if c.p_start >= q3_start and c.p_end >= q3_end
    ]
    survivors.sort(key=lambda c: (-c.p_self, c.start, c.span_length))
    return survivors


class TreeAlignmentError(ValueError):
    """Parse tree leaves do not line up with the sentence tokens."""


@dataclass(frozen=True)
class ParseTree:
    """Node of a constituency parse; terminals carry the leaf text."""

    label: str
    children: tuple["ParseTree", ...] = ()
    leaf_text: str | None = None

    @property
    def is_terminal(self) -> bool:
        return self.leaf_text is not None


def parse_bracketed(source: str) -> ParseTree:
    """Parse a PTB-style bracketed string: ``(LABEL child child)``.

    Terminals are bare tokens. Raises CorpusError on unbalanced or empty
    input.
    """
    pos = 0
    n = len(source)

    def skip_ws(p: int) -> int:
        while p < n and source[p].isspace():
            p += 1
        return p

    def parse_node(p: int) -> tuple[ParseTree, int]:
        p = skip_ws(p)
        if p >= n or source[p] != "(":
            raise CorpusError(f"expected '(' at position {p} in parse string")
        p = skip_ws(p + 1)
        start = p
        while p < n and not source[p].isspace() and source[p] not in "()":
            p += 1
        label = source[start:p]
        if not label:
            raise CorpusError(f"missing label at position {start} in parse string")
        children: list[ParseTree] = []
        while True:
            p = skip_ws(p)
            if p >= n:
                raise CorpusError("unbalanced parse string")
            if source[p] == ")":
                return ParseTree(label, tuple(children)), p + 1
            if source[p] == "(":
                child, p = parse_node(p)
                children.append(child)
            else:
                start = p
                while p < n and not source[p].isspace() and source[p] not in "()":
                    p += 1
                children.append(ParseTree(label, (), source[start:p]))

    tree, end = parse_node(0)
    if skip_ws(end) != n:
        raise CorpusError("trailing characters after parse string")
    return tree


def _is_punct_leaf(text: str) -> bool:
    return all(not ch.isalnum() for ch in text)


def extract_tree_segments(
    tree: ParseTree,
    sentence: Sentence,
    min_words: int = DEFAULT_MIN_WORDS,
    max_per_sentence: int = DEFAULT_MAX_PER_SENTENCE,
) -> list[tuple[int, int]]:
    """Token spans governed by the subtree nodes of a constituency parse.

    Word leaves are aligned left to right with the sentence's non-punct
    tokens (punctuation leaves are skipped). Spans are deduplicated, spans
    below min_words dropped, ordered by node depth ascending then span
    length descending, and truncated to max_per_sentence.
    """
    word_tokens = sentence.word_indices()
    leaves: list[str] = []

    def collect_leaves(node: ParseTree) -> None:
        if node.is_terminal:
            leaves.append(node.leaf_text)
        for child in node.children:
            collect_leaves(child)

    collect_leaves(tree)
    word_leaves = [t for t in leaves if not _is_punct_leaf(t)]
    if len(word_leaves) != len(word_tokens):
        raise TreeAlignmentError(
            f"parse for {sentence.doc_id} sentence {sentence.position}: "
            f"{len(word_leaves)} word leaves vs {len(word_tokens)} word tokens"
        )

    # (depth, first word ordinal, last word ordinal) per internal node.
    spans: list[tuple[int, int, int]] = []
    counter = {"next_word": 0}

    def walk(node: ParseTree, depth: int) -> tuple[int, int] | None:
        if node.is_terminal:
            if _is_punct_leaf(node.leaf_text):
                return None
            ordinal = counter["next_word"]
            counter["next_word"] += 1
            return (ordinal, ordinal)
        lo = None
        hi = None
        for child in node.children:
            got = walk(child, depth + 1)
            if got is not None:
                lo = got[0] if lo is None else min(lo, got[0])
                hi = got[1] if hi is None else max(hi, got[1])
        if lo is not None:
            spans.append((depth, lo, hi))
        return None if lo is None else (lo, hi)

    walk(tree, 0)

    spans.sort(key=lambda s: (s[0], -(s[2] - s[1]), s[1]))
    seen: set[tuple[int, int]] = set()
    out: list[tuple[int, int]] = []
    for _, lo, hi in spans:
        if (lo, hi) in seen:
            continue
        seen.add((lo, hi))
        if hi - lo + 1 < min_words:
            continue
        out.append((word_tokens[lo], word_tokens[hi]))
        if len(out) >= max_per_sentence:
            break
    return out


def load_parse_sidecar(path: str) -> dict[tuple[str, int], ParseTree]:
    """Read a parse sidecar JSONL file keyed by (doc_id, sentence_index)."""
    parses: dict[tuple[str, int], ParseTree] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            for field_name in ("doc_id", "sentence_index", "parse"):
                if field_name not in record:
                    raise CorpusError(
                        f"{path}: line {lineno} missing required field {field_name!r}"
                    )
            key = (record["doc_id"], record["sentence_index"])
            parses[key] = parse_bracketed(record["parse"])
    return parses


def write_candidates(candidates: Iterable[CandidateSegment], fh) -> None:
    for c in candidates:
        fh.write(
            json.dumps(
                {
                    "topic_id": c.topic_id,
                    "segment_id": c.segment_id,
                    "doc_id": c.doc_id,
                    "sentence_index": c.sentence_index,
                    "chunk_index": c.chunk_index,
                    "i": c.token_range[0],
                    "j": c.token_range[1],
                    "word_count": c.word_count,
                    "p_start": c.p_start,
                    "p_end": c.p_end,
                    "p_self": c.p_self,
                },
                ensure_ascii=False,
            )
            + "\n"
        )


def read_candidates(path: str) -> list[CandidateSegment]:
    out: list[CandidateSegment] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            out.append(
                CandidateSegment(
                    segment_id=record["segment_id"],
                    topic_id=record["topic_id"],
                    doc_id=record["doc_id"],
                    sentence_index=record["sentence_index"],
                    token_range=(record["i"], record["j"]),
                    word_count=record["word_count"],
                    chunk_index=record.get("chunk_index", 0),
                    p_start=record.get("p_start"),
                    p_end=record.get("p_end"),
                    p_self=record.get("p_self"),
                )
            )
    return out
