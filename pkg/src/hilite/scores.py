"""Span boundary scoring gateway.

Candidate spans need two probabilities: how plausibly the span starts,
and how plausibly it ends, a miniature sentence. Three interchangeable
sources provide them:

* ``FileScoreSource``     reads a precomputed score cache (JSONL);
* ``HttpScoreSource``     queries the neural scorer service over HTTP;
* ``FallbackScoreSource`` uses corpus boundary statistics, so the whole
  pipeline runs offline with no model. The fallback looks only at the
  span's first and last word and is deliberately crude.

Downstream code averages the two probabilities into the final
self-containedness score.
"""

from __future__ import annotations

import json
import os
import urllib.error
import urllib.request
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .corpus import CorpusError, Topic

__all__ = [
    "ScoreRequest",
    "ScoreResponse",
    "ScoreSource",
    "FileScoreSource",
    "HttpScoreSource",
    "FallbackScoreSource",
    "FallbackBoundaryModel",
    "GatewayError",
    "MissingScoreError",
    "ScorerTransportError",
    "SCORER_URL_ENV",
    "score_spans",
    "train_fallback",
    "write_score_file",
]

SCORER_URL_ENV = "HILITE_SCORER_URL"

# End-of-sentence marker sets for the fallback counts. A token starts a
# miniature sentence when it begins a sentence or follows one of
# _START_CONTEXT; it ends one when the next token is in _END_EOS.
_START_CONTEXT = frozenset({".", "!", "?", ","})
_END_EOS = frozenset({".", ","})


class GatewayError(RuntimeError):
    """Base class for scoring gateway failures."""


class MissingScoreError(GatewayError):
    """A file source has no entry for a requested span."""


class ScorerTransportError(GatewayError):
    """The HTTP scorer was unreachable or answered abnormally."""


@dataclass(frozen=True)
class ScoreRequest:
    request_id: str
    sentence_tokens: tuple[str, ...]
    span: tuple[int, int]
    # Identify the span for file-backed sources, which key on position
    # rather than token content.
    doc_id: str = ""
    sentence_index: int = -1

    def __post_init__(self) -> None:
        i, j = self.span
        if not (0 <= i <= j < len(self.sentence_tokens)):
            raise ValueError(f"span {self.span} out of range for request {self.request_id}")


@dataclass(frozen=True)
class ScoreResponse:
    request_id: str
    p_start: float
    p_end: float


class ScoreSource(Protocol):
    def score_spans(self, requests: Sequence[ScoreRequest]) -> list[ScoreResponse]: ...


def score_spans(
    source: "ScoreSource", requests: Sequence[ScoreRequest]
) -> list[ScoreResponse]:
    """Score a batch of spans; one response per request, order preserved."""
    return source.score_spans(requests)


class FileScoreSource:
    """Scores looked up from a JSONL cache keyed (doc_id, sentence_index, i, j)."""

    def __init__(self, path: str):
        self.path = path
        self._table: dict[tuple[str, int, int, int], tuple[float, float]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(
                        f"{path}: malformed JSON on line {lineno}: {exc}"
                    ) from exc
                key = (rec["doc_id"], rec["sentence_index"], rec["i"], rec["j"])
                self._table[key] = (rec["p_start"], rec["p_end"])

    def score_spans(self, requests: Sequence[ScoreRequest]) -> list[ScoreResponse]:
        missing = []
        out = []
        for req in requests:
            key = (req.doc_id, req.sentence_index, req.span[0], req.span[1])
            hit = self._table.get(key)
            if hit is None:
                missing.append(key)
                continue
            out.append(ScoreResponse(req.request_id, hit[0], hit[1]))
        if missing:
            shown = ", ".join(repr(k) for k in missing[:10])
            raise MissingScoreError(
                f"{self.path}: no score for {len(missing)} span(s); first: {shown}"
            )
        return out


class HttpScoreSource:
    """Client for the neural scorer's POST /v1/score endpoint.

    The configured base URL can be overridden by the HILITE_SCORER_URL
    environment variable. Responses are matched back to requests by
    request_id, so the wire order does not matter.
    """

    def __init__(self, base_url: str | None = None, timeout: float = 30.0):
        env = os.environ.get(SCORER_URL_ENV)
        if env:
            base_url = env
        if not base_url:
            raise GatewayError(
                f"no scorer endpoint configured; pass a URL or set {SCORER_URL_ENV}"
            )
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout

    def _post(self, path: str, payload: dict) -> dict:
        url = self.base_url + path
        body = json.dumps(payload).encode("utf-8")
        request = urllib.request.Request(
            url, data=body, headers={"Content-Type": "application/json"}
        )
        try:
            with urllib.request.urlopen(request, timeout=self.timeout) as resp:
                if not (200 <= resp.status < 300):
                    raise ScorerTransportError(f"{url}: HTTP {resp.status}")
                return json.loads(resp.read().decode("utf-8"))
        except urllib.error.HTTPError as exc:
            raise ScorerTransportError(f"{url}: HTTP {exc.code}") from exc
        except urllib.error.URLError as exc:
            raise ScorerTransportError(f"{url}: {exc.reason}") from exc

    def score_spans(self, requests: Sequence[ScoreRequest]) -> list[ScoreResponse]:
        if not requests:
            return []
        payload = {
            "requests": [
                {
                    "request_id": r.request_id,
                    "tokens": list(r.sentence_tokens),
                    "i": r.span[0],
                    "j": r.span[1],
                }
                for r in requests
            ]
        }
        raw = self._post("/v1/score", payload)
        by_id = {r["request_id"]: r for r in raw.get("responses", [])}
        missing = [r.request_id for r in requests if r.request_id not in by_id]
        if missing:
            raise ScorerTransportError(
                f"{self.base_url}/v1/score: response missing ids {missing[:10]}"
            )
        return [
            ScoreResponse(r.request_id, by_id[r.request_id]["p_start"], by_id[r.request_id]["p_end"])
            for r in requests
        ]


@dataclass
class FallbackBoundaryModel:
    """Laplace-smoothed unigram boundary statistics.

    ``start_counts[w]`` is (times w appeared sentence-initially or right
    after an eos marker, total occurrences of w); ``end_counts[w]`` the
    analogue for appearing right before a period or comma. Queries return
    (hits + alpha) / (total + 2 alpha), so probabilities are strictly
    inside (0, 1).
    """

    alpha: float = 1.0
    start_counts: dict[str, tuple[int, int]] = field(default_factory=dict)
    end_counts: dict[str, tuple[int, int]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def p_start(self, token: str) -> float:
        hits, total = self.start_counts.get(token.lower(), (0, 0))
        return (hits + self.alpha) / (total + 2 * self.alpha)

    def p_end(self, token: str) -> float:
        hits, total = self.end_counts.get(token.lower(), (0, 0))
        return (hits + self.alpha) / (total + 2 * self.alpha)


def train_fallback(corpus: Iterable[Topic], alpha: float = 1.0) -> FallbackBoundaryModel:
    """Count boundary contexts over every document sentence in the corpus."""
    start_hits: dict[str, int] = defaultdict(int)
    end_hits: dict[str, int] = defaultdict(int)
    totals: dict[str, int] = defaultdict(int)
    seen_any = False
    for topic in corpus:
        seen_any = True
        for sentence in topic.sentences():
            tokens = sentence.tokens
            for k, tok in enumerate(tokens):
                w = tok.text.lower()
                totals[w] += 1
                if k == 0 or tokens[k - 1].text in _START_CONTEXT:
                    start_hits[w] += 1
                if k + 1 < len(tokens) and tokens[k + 1].text in _END_EOS:
                    end_hits[w] += 1
    if not seen_any:
        raise ValueError("cannot train fallback model on an empty corpus")
    model = FallbackBoundaryModel(alpha=alpha)
    model.start_counts = {w: (start_hits[w], totals[w]) for w in totals}
    model.end_counts = {w: (end_hits[w], totals[w]) for w in totals}
    return model


class FallbackScoreSource:
    """Adapter exposing a FallbackBoundaryModel through the gateway interface."""

    def __init__(self, model: FallbackBoundaryModel):
        self.model = model

    def score_spans(self, requests: Sequence[ScoreRequest]) -> list[ScoreResponse]:
        out = []
        for req in requests:
            i, j = req.span
            out.append(
                ScoreResponse(
                    req.request_id,
                    self.model.p_start(req.sentence_tokens[i]),
                    self.model.p_end(req.sentence_tokens[j]),
                )
            )
        return out


def write_score_file(responses_with_keys: Iterable[tuple[ScoreRequest, ScoreResponse]], fh) -> None:
    """Emit a score cache readable by FileScoreSource."""
    for req, resp in responses_with_keys:
        fh.write(
            json.dumps(
                {
                    "doc_id": req.doc_id,
                    "sentence_index": req.sentence_index,
                    "i": req.span[0],
                    "j": req.span[1],
                    "p_start": resp.p_start,
                    "p_end": resp.p_end,
                },
                ensure_ascii=False,
            )
            + "\n"
        )
