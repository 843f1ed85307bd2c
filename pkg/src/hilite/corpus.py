"""Topic ingestion: tokenization, punctuation chunking, and the in-memory corpus.

A corpus is a set of topics. Each topic bundles a cluster of news documents
with its human reference summaries and a word budget for the system summary.
Sentences arrive pre-split (one string per sentence in the input JSONL);
this module tokenizes them and cuts each sentence into punctuation-delimited
chunks, which are the units candidate segments are drawn from.

All objects are immutable after loading and safe to share across threads.
"""

from __future__ import annotations

import json
import string
from dataclasses import dataclass
from typing import Iterable, Iterator

__all__ = [
    "Token",
    "Chunk",
    "Sentence",
    "Document",
    "Topic",
    "CorpusError",
    "DEFAULT_SPLIT_SET",
    "TERMINAL_PUNCT",
    "tokenize",
    "chunk_sentence",
    "load_topic",
    "load_topics",
    "dump_topic",
]

# Characters that are peeled off word boundaries into their own tokens.
# Currency signs stay attached ("$65" is one word token); internal
# apostrophes and hyphens are never touched ("year's", "so-called").
_DETACH_CHARS = frozenset(string.punctuation.replace("$", "")) | {"—", "–"}

# Everything we consider punctuation when flagging whole tokens.
_PUNCT_CHARS = frozenset(string.punctuation) | {
    "—", "–", "‘", "’", "“", "”", "…",
}

# Chunk boundaries inside a sentence.
DEFAULT_SPLIT_SET = frozenset({",", ";", ":", "—", "–"})

# Sentence-final punctuation; never chunk-internal.
TERMINAL_PUNCT = frozenset({".", "!", "?"})


class CorpusError(ValueError):
    """Raised for malformed corpus files or schema violations."""


@dataclass(frozen=True)
class Token:
    """A single token with its character span in the source sentence."""

    text: str
    is_punct: bool
    char_span: tuple[int, int]


@dataclass(frozen=True)
class Chunk:
    """Inclusive token index range of one punctuation-delimited chunk."""

    token_range: tuple[int, int]

    @property
    def first(self) -> int:
        return self.token_range[0]

    @property
    def last(self) -> int:
        return self.token_range[1]


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    position: int
    text: str
    tokens: tuple[Token, ...]
    chunks: tuple[Chunk, ...]

    def word_count(self) -> int:
        return sum(1 for t in self.tokens if not t.is_punct)

    def word_indices(self) -> list[int]:
        """Token indices of non-punctuation tokens, in order."""
        return [k for k, t in enumerate(self.tokens) if not t.is_punct]

    def span_text(self, i: int, j: int) -> str:
        """Source text covered by tokens i..j inclusive."""
        return self.text[self.tokens[i].char_span[0]:self.tokens[j].char_span[1]]


@dataclass(frozen=True)
class Document:
    doc_id: str
    sentences: tuple[Sentence, ...]


@dataclass(frozen=True)
class Reference:
    ref_id: str
    text: str
    tokens: tuple[Token, ...]


@dataclass(frozen=True)
class Topic:
    topic_id: str
    documents: tuple[Document, ...]
    references: tuple[Reference, ...]
    budget_words: int = 100

    def __post_init__(self) -> None:
        if not self.documents:
            raise CorpusError("topic must contain at least one document")
        if self.budget_words <= 0:
            raise CorpusError("budget_words must be positive")

    def sentences(self) -> Iterator[Sentence]:
        for doc in self.documents:
            yield from doc.sentences

    def document(self, doc_id: str) -> Document:
        for doc in self.documents:
            if doc.doc_id == doc_id:
                return doc
        raise KeyError(doc_id)

    def reference_token_texts(self) -> list[list[str]]:
        return [[t.text for t in ref.tokens] for ref in self.references]

    def is_paper_faithful(self) -> bool:
        """Ten documents and four references, the benchmark layout."""
        return len(self.documents) == 10 and len(self.references) == 4


def tokenize(raw_sentence: str) -> list[Token]:
    """Tokenize one sentence, preserving character offsets.

    Splits on whitespace, then peels leading and trailing punctuation
    characters into their own tokens. Concatenating the token texts
    reproduces every non-whitespace character of the input.
    """
    tokens: list[Token] = []
    start = None
    pieces: list[tuple[int, int]] = []
    for pos, ch in enumerate(raw_sentence):
        if ch.isspace():
            if start is not None:
                pieces.append((start, pos))
                start = None
        elif start is None:
            start = pos
    if start is not None:
        pieces.append((start, len(raw_sentence)))

    for lo, hi in pieces:
        s, e = lo, hi
        left: list[int] = []
        right: list[int] = []
        while s < e and raw_sentence[s] in _DETACH_CHARS:
            left.append(s)
            s += 1
        while e > s and raw_sentence[e - 1] in _DETACH_CHARS:
            right.append(e - 1)
            e -= 1
        for p in left:
            tokens.append(Token(raw_sentence[p], True, (p, p + 1)))
        if s < e:
            text = raw_sentence[s:e]
            is_punct = all(c in _PUNCT_CHARS for c in text)
            tokens.append(Token(text, is_punct, (s, e)))
        for p in reversed(right):
            tokens.append(Token(raw_sentence[p], True, (p, p + 1)))
    return tokens


def chunk_sentence(
    tokens: Iterable[Token],
    split_set: frozenset[str] = DEFAULT_SPLIT_SET,
) -> list[Chunk]:
    """Cut a token sequence into chunks at splitting punctuation.

    A chunk is a maximal run of tokens between splitting punctuation
    (the split set plus sentence-terminal . ! ?) or sentence boundaries.
    Splitting tokens belong to no chunk; runs containing no words at all
    are dropped.
    """
    boundaries = split_set | TERMINAL_PUNCT
    chunks: list[Chunk] = []
    run_start = None
    run_has_word = False
    for k, tok in enumerate(tokens):
        if tok.is_punct and tok.text in boundaries:
            if run_start is not None and run_has_word:
                chunks.append(Chunk((run_start, k - 1)))
            run_start = None
            run_has_word = False
        else:
            if run_start is None:
                run_start = k
            run_has_word = run_has_word or not tok.is_punct
            last = k
    if run_start is not None and run_has_word:
        chunks.append(Chunk((run_start, last)))
    return chunks


def _build_sentence(
    doc_id: str, position: int, text: str, split_set: frozenset[str]
) -> Sentence:
    tokens = tuple(tokenize(text))
    chunks = tuple(chunk_sentence(tokens, split_set))
    return Sentence(doc_id, position, text, tokens, chunks)


def _parse_lines(path: str) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}: malformed JSON on line {lineno}: {exc}") from exc
            if not isinstance(record, dict):
                raise CorpusError(f"{path}: line {lineno} is not a JSON object")
            yield lineno, record


def _require(record: dict, field_name: str, lineno: int, path: str):
    if field_name not in record:
        raise CorpusError(f"{path}: line {lineno} missing required field {field_name!r}")
    return record[field_name]


def load_topics(
    path: str,
    budget_words: int = 100,
    split_set: frozenset[str] = DEFAULT_SPLIT_SET,
) -> list[Topic]:
    """Load every topic from a JSONL corpus file, in order of first appearance.

    Each line is either a document record
    ``{"type":"doc","topic_id":...,"doc_id":...,"sentences":[...]}``
    or a reference record
    ``{"type":"ref","topic_id":...,"ref_id":...,"text":...}``.
    """
    docs: dict[str, list[Document]] = {}
    refs: dict[str, list[Reference]] = {}
    order: list[str] = []

    for lineno, record in _parse_lines(path):
        kind = _require(record, "type", lineno, path)
        topic_id = _require(record, "topic_id", lineno, path)
        if topic_id not in docs:
            docs[topic_id] = []
            refs[topic_id] = []
            order.append(topic_id)
        if kind == "doc":
            doc_id = _require(record, "doc_id", lineno, path)
            sentences = _require(record, "sentences", lineno, path)
            built = tuple(
                _build_sentence(doc_id, i, s, split_set) for i, s in enumerate(sentences)
            )
            docs[topic_id].append(Document(doc_id, built))
        elif kind == "ref":
            ref_id = _require(record, "ref_id", lineno, path)
            text = _require(record, "text", lineno, path)
            refs[topic_id].append(Reference(ref_id, text, tuple(tokenize(text))))
        else:
            raise CorpusError(f"{path}: line {lineno} has unknown type {kind!r}")

    topics = []
    for topic_id in order:
        if not docs[topic_id]:
            raise CorpusError("topic must contain at least one document")
        topics.append(
            Topic(topic_id, tuple(docs[topic_id]), tuple(refs[topic_id]), budget_words)
        )
    if not topics:
        raise CorpusError(f"{path}: no topics found")
    return topics


def load_topic(
    path: str,
    budget_words: int = 100,
    split_set: frozenset[str] = DEFAULT_SPLIT_SET,
) -> Topic:
    """Load a single-topic corpus file; errors if the file holds several."""
    topics = load_topics(path, budget_words, split_set)
    if len(topics) != 1:
        raise CorpusError(f"{path}: expected one topic, found {len(topics)}")
    return topics[0]


def dump_topic(topic: Topic) -> list[str]:
    """Serialize a topic back to its JSONL lines (doc records, then refs)."""
    lines = []
    for doc in topic.documents:
        lines.append(
            json.dumps(
                {
                    "type": "doc",
                    "topic_id": topic.topic_id,
                    "doc_id": doc.doc_id,
                    "sentences": [s.text for s in doc.sentences],
                },
                ensure_ascii=False,
            )
        )
    for ref in topic.references:
        lines.append(
            json.dumps(
                {
                    "type": "ref",
                    "topic_id": topic.topic_id,
                    "ref_id": ref.ref_id,
                    "text": ref.text,
                },
                ensure_ascii=False,
            )
        )
    return lines
