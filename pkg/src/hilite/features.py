"""Quality features and pairwise similarity for candidate segments.

The quality side of the selection model sees, per segment, a relevance
vector from the inverted-pyramid scorer (or a two-dimensional local
fallback) followed by four surface features and a bias term. The
diversity side is a segment-by-segment cosine similarity matrix over
TF-IDF unigram vectors, built as a Gram matrix of unit vectors so it is
positive semi-definite by construction.
"""

from __future__ import annotations

import json
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass
from math import log, sqrt
from typing import Sequence

import numpy as np

from .corpus import Document, Topic
from .segment import CandidateSegment
from .scores import ScorerTransportError
from .stopwords import STOPWORDS

__all__ = [
    "TfidfModel",
    "PyramidPair",
    "PyramidFeaturizer",
    "PyramidServiceClient",
    "FeatureConfigError",
    "build_pyramid_pairs",
    "surface_features",
    "similarity_matrix",
    "assemble_features",
    "lead_paragraph",
    "bottom_paragraph",
    "FALLBACK_PYRAMID_DIM",
    "SURFACE_DIM",
]

FALLBACK_PYRAMID_DIM = 2
# word count, doc position, sentence position, doc cosine.
SURFACE_DIM = 4

LEAD_SIZE = 5


class FeatureConfigError(RuntimeError):
    """Feature source misconfiguration, e.g. a drifting service dimension."""


def _content_terms(tokens: Sequence[str]) -> list[str]:
    return [t.lower() for t in tokens if any(ch.isalnum() for ch in t)]


class TfidfModel:
    """Topic-level TF-IDF vectors over lowercased non-punct unigrams.

    tf is the raw count; idf is ln(n_docs / df) with the vocabulary
    restricted to terms that occur in the topic's documents. When that
    weighting zeroes a vector out entirely (ubiquitous terms have zero
    idf), cosine falls back to raw counts so that identical texts still
    score 1.
    """

    def __init__(self, topic: Topic):
        self.n_docs = len(topic.documents)
        df: Counter[str] = Counter()
        for doc in topic.documents:
            seen = set()
            for sentence in doc.sentences:
                seen.update(_content_terms([t.text for t in sentence.tokens]))
            df.update(seen)
        self.idf = {term: log(self.n_docs / df[term]) for term in df}

    def weights(self, tokens: Sequence[str]) -> dict[str, float]:
        counts = Counter(_content_terms(tokens))
        return {
            t: c * self.idf[t] for t, c in counts.items() if t in self.idf and self.idf[t] > 0.0
        }

    def cosine(self, a: Sequence[str], b: Sequence[str]) -> float:
        wa, wb = self.weights(a), self.weights(b)
        if not wa or not wb:
            # Zero-weight vectors carry no signal; fall back to raw counts.
            wa = dict(Counter(_content_terms(a)))
            wb = dict(Counter(_content_terms(b)))
            if not wa or not wb:
                return 0.0
        dot = sum(v * wb.get(t, 0.0) for t, v in wa.items())
        na = sqrt(sum(v * v for v in wa.values()))
        nb = sqrt(sum(v * v for v in wb.values()))
        if na == 0.0 or nb == 0.0:
            return 0.0
        return dot / (na * nb)


@dataclass(frozen=True)
class PyramidPair:
    """A classifier training pair: a summary sentence against a paragraph."""

    summary_sentence: tuple[str, ...]
    paragraph: tuple[str, ...]
    label: str  # "positive" (lead paragraph) or "negative" (bottom paragraph)


def build_pyramid_pairs(
    article_sentences: Sequence[Sequence[str]],
    summary_sentences: Sequence[Sequence[str]],
) -> list[PyramidPair]:
    """Pair each summary sentence with the article's lead and bottom paragraphs.

    The lead paragraph is the first min(5, n) article sentences and the
    bottom the last min(5, n). A summary sentence appearing verbatim in a
    paragraph is excluded from that paragraph.
    """
    if not article_sentences:
        raise ValueError("article must contain at least one sentence")
    n = len(article_sentences)
    k = min(LEAD_SIZE, n)
    lead = list(article_sentences[:k])
    bottom = list(article_sentences[n - k:])

    pairs = []
    for summary in summary_sentences:
        key = tuple(summary)
        lead_tokens = tuple(
            tok for sent in lead if tuple(sent) != key for tok in sent
        )
        bottom_tokens = tuple(
            tok for sent in bottom if tuple(sent) != key for tok in sent
        )
        pairs.append(PyramidPair(tuple(summary), lead_tokens, "positive"))
        pairs.append(PyramidPair(tuple(summary), bottom_tokens, "negative"))
    return pairs


def lead_paragraph(document: Document) -> list[str]:
    k = min(LEAD_SIZE, len(document.sentences))
    return [t.text for s in document.sentences[:k] for t in s.tokens]


def bottom_paragraph(document: Document) -> list[str]:
    n = len(document.sentences)
    k = min(LEAD_SIZE, n)
    return [t.text for s in document.sentences[n - k:] for t in s.tokens]


class PyramidServiceClient:
    """Client for the neural scorer's /v1/meta and /v1/pyramid endpoints."""

    def __init__(self, base_url: str, timeout: float = 30.0):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.pyramid_dim = self._fetch_meta()["pyramid_dim"]

    def _fetch_meta(self) -> dict:
        url = self.base_url + "/v1/meta"
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.URLError as exc:
            raise ScorerTransportError(f"{url}: {exc.reason}") from exc

    def vectors(
        self, batch: Sequence[tuple[Sequence[str], Sequence[str]]]
    ) -> list[list[float]]:
        url = self.base_url + "/v1/pyramid"
        payload = {
            "requests": [
                {
                    "request_id": f"p{k}",
                    "segment_tokens": list(seg),
                    "lead_tokens": list(lead),
                }
                for k, (seg, lead) in enumerate(batch)
            ]
        }
        body = json.dumps(payload).encode("utf-8")
        request = urllib.request.Request(
            url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                raw = json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raise ScorerTransportError(f"{url}: HTTP {exc.code}") from exc
        except urllib.error.URLError as exc:
            raise ScorerTransportError(f"{url}: {exc.reason}") from exc
        by_id = {r["request_id"]: r["vector"] for r in raw.get("responses", [])}
        out = []
        for k in range(len(batch)):
            vec = by_id.get(f"p{k}")
            if vec is None:
                raise ScorerTransportError(f"{url}: response missing id p{k}")
            if len(vec) != self.pyramid_dim:
                raise FeatureConfigError(
                    f"service pyramid dimension changed: meta declared "
                    f"{self.pyramid_dim}, got vector of length {len(vec)}"
                )
            out.append(vec)
        return out


class PyramidFeaturizer:
    """Produces the relevance block of each segment's feature vector.

    In service mode the vector comes from the classifier service and has
    the dimension declared by /v1/meta. In fallback mode it is two local
    TF-IDF cosines: segment vs lead paragraph and segment vs bottom
    paragraph.
    """

    def __init__(self, tfidf: TfidfModel, service: PyramidServiceClient | None = None):
        self.tfidf = tfidf
        self.service = service
        self.dim = service.pyramid_dim if service is not None else FALLBACK_PYRAMID_DIM

    def features(
        self,
        segment_tokens: Sequence[str],
        lead_tokens: Sequence[str],
        bottom_tokens: Sequence[str],
    ) -> list[float]:
        if not lead_tokens:
            raise ValueError("lead paragraph must be non-empty")
        if self.service is not None:
            return self.service.vectors([(segment_tokens, lead_tokens)])[0]
        return [
            self.tfidf.cosine(segment_tokens, lead_tokens),
            self.tfidf.cosine(segment_tokens, bottom_tokens),
        ]


def surface_features(
    segment: CandidateSegment, document: Document, tfidf: TfidfModel, budget_words: int
) -> list[float]:
    """Length, document position, sentence position, and document cosine."""
    sentence = document.sentences[segment.sentence_index]
    words = sentence.word_indices()
    word_pos = words.index(segment.token_range[0])
    doc_tokens = [t.text for s in document.sentences for t in s.tokens]
    seg_tokens = [
        t.text for t in sentence.tokens[segment.token_range[0]:segment.token_range[1] + 1]
    ]
    return [
        segment.word_count / budget_words,
        segment.sentence_index / len(document.sentences),
        word_pos / len(words),
        tfidf.cosine(seg_tokens, doc_tokens),
    ]


def similarity_matrix(
    segment_token_lists: Sequence[Sequence[str]], tfidf: TfidfModel
) -> np.ndarray:
    """Pairwise segment similarity as a Gram matrix of unit TF-IDF vectors.

    Stopwords are removed before weighting so function words cannot
    saturate the cosine. A segment left empty by stopword removal falls
    back to its raw token counts; a segment that is still empty gets a
    zero row with a unit diagonal.
    """
    if not segment_token_lists:
        raise ValueError("need at least one segment")
    rows = []
    vocab: dict[str, int] = {}
    for tokens in segment_token_lists:
        content = [t for t in _content_terms(tokens) if t not in STOPWORDS]
        weighted = {t: c * tfidf.idf.get(t, 0.0) for t, c in Counter(content).items()}
        weights = {t: w for t, w in weighted.items() if w > 0.0}
        if not weights:
            weights = dict(Counter(_content_terms(tokens)))
        for t in weights:
            if t not in vocab:
                vocab[t] = len(vocab)
        rows.append(weights)

    n = len(rows)
    mat = np.zeros((n, max(len(vocab), 1)))
    for r, weights in enumerate(rows):
        for t, w in weights.items():
            mat[r, vocab[t]] = w
        norm = np.linalg.norm(mat[r])
        if norm > 0:
            mat[r] /= norm
    sim = mat @ mat.T
    np.fill_diagonal(sim, 1.0)
    return sim


def assemble_features(
    topic: Topic,
    candidates: Sequence[CandidateSegment],
    featurizer: PyramidFeaturizer,
) -> np.ndarray:
    """Full feature matrix: pyramid block, surface block, bias column."""
    by_doc = {doc.doc_id: doc for doc in topic.documents}
    leads = {doc_id: lead_paragraph(doc) for doc_id, doc in by_doc.items()}
    bottoms = {doc_id: bottom_paragraph(doc) for doc_id, doc in by_doc.items()}

    vectors = []
    for c in candidates:
        doc = by_doc[c.doc_id]
        sentence = doc.sentences[c.sentence_index]
        seg_tokens = [
            t.text for t in sentence.tokens[c.token_range[0]:c.token_range[1] + 1]
        ]
        pyramid = featurizer.features(seg_tokens, leads[c.doc_id], bottoms[c.doc_id])
        surface = surface_features(c, doc, featurizer.tfidf, topic.budget_words)
        vectors.append(pyramid + surface + [1.0])
    return np.asarray(vectors, dtype=np.float64)
