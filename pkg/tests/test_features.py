import json
import math
import random
import threading
from collections import Counter
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from hilite import corpus
from hilite.features import (
    FeatureConfigError,
    PyramidFeaturizer,
    PyramidServiceClient,
    TfidfModel,
    assemble_features,
    bottom_paragraph,
    build_pyramid_pairs,
    lead_paragraph,
    similarity_matrix,
    surface_features,
)
from hilite.pipeline import generate_candidates
from hilite.segment import CandidateSegment
from hilite.stopwords import STOPWORDS


def build_topic(doc_sentences, refs=("A reference summary.",), topic_id="t"):
    docs = []
    for d, sentences in enumerate(doc_sentences):
        built = tuple(
            corpus.Sentence(
                f"d{d}", k, s, tuple(corpus.tokenize(s)),
                tuple(corpus.chunk_sentence(corpus.tokenize(s))),
            )
            for k, s in enumerate(sentences)
        )
        docs.append(corpus.Document(f"d{d}", built))
    references = tuple(
        corpus.Reference(str(k), r, tuple(corpus.tokenize(r))) for k, r in enumerate(refs)
    )
    return corpus.Topic(topic_id, tuple(docs), references)


def sentences_of(texts):
    return [[t.text for t in corpus.tokenize(s)] for s in texts]


# --- pyramid pairs -----------------------------------------------------------


def test_pyramid_pairs_long_article():
    article = sentences_of([f"Article sentence number {k} speaks." for k in range(12)])
    summary = sentences_of(["First summary line here.", "Second summary line here."])
    pairs = build_pyramid_pairs(article, summary)
    assert len(pairs) == 4
    positives = [p for p in pairs if p.label == "positive"]
    lead_tokens = tuple(tok for sent in article[:5] for tok in sent)
    bottom_tokens = tuple(tok for sent in article[7:] for tok in sent)
    assert positives[0].paragraph == lead_tokens
    negatives = [p for p in pairs if p.label == "negative"]
    assert negatives[0].paragraph == bottom_tokens


def test_pyramid_pairs_excludes_verbatim_summary_sentence():
    article = sentences_of([f"Unique sentence number {k} here." for k in range(6)])
    summary = [list(article[1])]
    pairs = build_pyramid_pairs(article, summary)
    positive = next(p for p in pairs if p.label == "positive")
    expected = tuple(tok for k in (0, 2, 3, 4) for tok in article[k])
    assert positive.paragraph == expected


def test_pyramid_pairs_short_article_degenerate():
    article = sentences_of(["One here.", "Two here.", "Three here."])
    summary = sentences_of(["A summary."])
    pairs = build_pyramid_pairs(article, summary)
    assert pairs[0].paragraph == pairs[1].paragraph  # lead == bottom


def test_pyramid_pairs_empty_summary():
    article = sentences_of(["Only sentence."])
    assert build_pyramid_pairs(article, []) == []


# --- tf-idf cosines ----------------------------------------------------------


def brute_force_tfidf_cosine(topic, tokens_a, tokens_b):
    """Independent dot-product computation over explicit dense vectors."""
    def words(tokens):
        return [t.lower() for t in tokens if any(ch.isalnum() for ch in t)]

    doc_terms = []
    for doc in topic.documents:
        doc_terms.append(set(words([t.text for s in doc.sentences for t in s.tokens])))
    vocab = sorted(set().union(*doc_terms))
    n = len(topic.documents)
    idf = {
        t: math.log(n / sum(1 for terms in doc_terms if t in terms)) for t in vocab
    }

    def vector(tokens):
        counts = Counter(words(tokens))
        return [counts.get(t, 0) * idf[t] for t in vocab]

    va, vb = vector(tokens_a), vector(tokens_b)
    na, nb = math.sqrt(sum(x * x for x in va)), math.sqrt(sum(x * x for x in vb))
    if na == 0 or nb == 0:
        # Mirror the raw-count fallback.
        ca, cb = Counter(words(tokens_a)), Counter(words(tokens_b))
        if not ca or not cb:
            return 0.0
        dot = sum(v * cb.get(t, 0) for t, v in ca.items())
        na = math.sqrt(sum(v * v for v in ca.values()))
        nb = math.sqrt(sum(v * v for v in cb.values()))
        return dot / (na * nb)
    return sum(x * y for x, y in zip(va, vb)) / (na * nb)


@pytest.fixture
def three_doc_topic():
    return build_topic(
        [
            ["Storms flooded the northern valley, closing every road."],
            ["Crews repaired the flooded road, and storms moved east."],
            ["Farmers in the valley lost cattle and barns to the water."],
        ]
    )


def test_pyramid_fallback_zero_overlap(three_doc_topic):
    featurizer = PyramidFeaturizer(TfidfModel(three_doc_topic))
    vec = featurizer.features(
        ["quantum", "entanglement", "measured"],
        ["Storms", "flooded", "the", "valley"],
        ["cattle", "and", "barns"],
    )
    assert vec[0] == pytest.approx(0.0)


def test_pyramid_fallback_identical_text(three_doc_topic):
    lead = ["Storms", "flooded", "the", "northern", "valley"]
    featurizer = PyramidFeaturizer(TfidfModel(three_doc_topic))
    vec = featurizer.features(list(lead), lead, ["unrelated", "words"])
    assert vec[0] == pytest.approx(1.0)
    assert len(vec) == featurizer.dim == 2


def test_pyramid_fallback_matches_brute_force(three_doc_topic):
    tfidf = TfidfModel(three_doc_topic)
    seg = ["storms", "flooded", "the", "road"]
    lead = [t.text for s in three_doc_topic.documents[0].sentences for t in s.tokens]
    expected = brute_force_tfidf_cosine(three_doc_topic, seg, lead)
    assert tfidf.cosine(seg, lead) == pytest.approx(expected, abs=1e-12)


def test_pyramid_fallback_bounded(three_doc_topic):
    featurizer = PyramidFeaturizer(TfidfModel(three_doc_topic))
    rng = random.Random(3)
    words = "storms flooded valley road crews cattle barns water east".split()
    for _ in range(50):
        seg = [rng.choice(words) for _ in range(rng.randint(1, 8))]
        vec = featurizer.features(seg, ["Storms", "flooded", "valley"], ["cattle", "barns"])
        assert all(0.0 <= v <= 1.0 + 1e-12 for v in vec)


# --- surface features ---------------------------------------------------------


def test_surface_first_segment_positions_zero(three_doc_topic):
    doc = three_doc_topic.documents[0]
    seg = CandidateSegment(0, "t", "d0", 0, (0, 4), 5)
    tfidf = TfidfModel(three_doc_topic)
    vec = surface_features(seg, doc, tfidf, 100)
    assert vec[1] == 0.0 and vec[2] == 0.0
    assert vec[0] == pytest.approx(0.05)


def test_surface_whole_single_sentence_doc_cosine_one():
    topic = build_topic([["Coastal storms damaged the old harbor wall."]])
    doc = topic.documents[0]
    n_tokens = len(doc.sentences[0].tokens)
    words = doc.sentences[0].word_count()
    seg = CandidateSegment(0, "t", "d0", 0, (0, n_tokens - 1), words)
    vec = surface_features(seg, doc, TfidfModel(topic), 100)
    assert vec[3] == pytest.approx(1.0)


def test_surface_length_feature():
    topic = build_topic([["one two three four five six seven eight nine ten"]])
    seg = CandidateSegment(0, "t", "d0", 0, (0, 9), 10)
    vec = surface_features(seg, topic.documents[0], TfidfModel(topic), 100)
    assert vec[0] == pytest.approx(0.1)


# --- similarity matrix --------------------------------------------------------


def test_similarity_identical_segments(three_doc_topic):
    tfidf = TfidfModel(three_doc_topic)
    seg = ["storms", "flooded", "valley"]
    S = similarity_matrix([seg, list(seg)], tfidf)
    assert S[0, 1] == pytest.approx(1.0)


def test_similarity_disjoint_segments(three_doc_topic):
    tfidf = TfidfModel(three_doc_topic)
    S = similarity_matrix([["storms", "flooded"], ["cattle", "barns"]], tfidf)
    assert S[0, 1] == pytest.approx(0.0)


def test_similarity_full_matrix_against_brute_force(three_doc_topic):
    tfidf = TfidfModel(three_doc_topic)
    segs = [
        ["storms", "flooded", "valley"],
        ["crews", "repaired", "road"],
        ["storms", "moved", "east"],
    ]
    S = similarity_matrix(segs, tfidf)

    def brute_cosine(a, b):
        wa = {t: c * tfidf.idf.get(t, 0.0) for t, c in Counter(
            x for x in a if x not in STOPWORDS).items() if tfidf.idf.get(t, 0.0) > 0}
        wb = {t: c * tfidf.idf.get(t, 0.0) for t, c in Counter(
            x for x in b if x not in STOPWORDS).items() if tfidf.idf.get(t, 0.0) > 0}
        dot = sum(v * wb.get(t, 0.0) for t, v in wa.items())
        na = math.sqrt(sum(v * v for v in wa.values()))
        nb = math.sqrt(sum(v * v for v in wb.values()))
        return dot / (na * nb) if na and nb else 0.0

    for a in range(3):
        for b in range(3):
            expected = 1.0 if a == b else brute_cosine(segs[a], segs[b])
            assert S[a, b] == pytest.approx(expected, abs=1e-12)
    assert np.linalg.eigvalsh(S).min() >= -1e-10


def test_similarity_structure_random_fuzz(three_doc_topic):
    tfidf = TfidfModel(three_doc_topic)
    vocabulary = "storms flooded valley road crews cattle barns water east the and".split()
    rng = random.Random(11)
    for _ in range(1000):
        n = rng.randint(1, 6)
        segs = [
            [rng.choice(vocabulary) for _ in range(rng.randint(1, 7))] for _ in range(n)
        ]
        S = similarity_matrix(segs, tfidf)
        assert np.allclose(S, S.T)
        assert np.all(np.diag(S) == 1.0)
        assert np.all(S >= -1e-12) and np.all(S <= 1.0 + 1e-9)
        assert np.linalg.eigvalsh(S).min() >= -1e-8


def test_similarity_stopword_only_segment_falls_back():
    topic = build_topic([["The of and in was."], ["Full speech arrived today."]])
    tfidf = TfidfModel(topic)
    S = similarity_matrix([["the", "of", "and"], ["the", "of", "and"]], tfidf)
    # Raw-count fallback makes identical stopword runs fully similar.
    assert S[0, 1] == pytest.approx(1.0)


def test_similarity_duplicating_documents_preserves_entries(three_doc_topic):
    doubled = corpus.Topic(
        "t2",
        three_doc_topic.documents
        + tuple(
            corpus.Document(d.doc_id + "-copy", d.sentences)
            for d in three_doc_topic.documents
        ),
        three_doc_topic.references,
    )
    segs = [
        ["storms", "flooded", "valley"],
        ["crews", "repaired", "road"],
        ["cattle", "and", "barns"],
    ]
    S1 = similarity_matrix(segs, TfidfModel(three_doc_topic))
    S2 = similarity_matrix(segs, TfidfModel(doubled))
    assert np.allclose(S1, S2, atol=1e-12)


# --- assembled feature matrix --------------------------------------------------


def test_assemble_features_layout(three_doc_topic):
    candidates = generate_candidates(three_doc_topic, min_words=3)
    featurizer = PyramidFeaturizer(TfidfModel(three_doc_topic))
    feats = assemble_features(three_doc_topic, candidates, featurizer)
    assert feats.shape == (len(candidates), featurizer.dim + 4 + 1)
    assert np.all(feats[:, -1] == 1.0)
    assert np.all(np.isfinite(feats))


def test_lead_and_bottom_paragraph_shapes(three_doc_topic):
    doc = three_doc_topic.documents[0]
    assert lead_paragraph(doc) == [t.text for s in doc.sentences[:5] for t in s.tokens]
    assert bottom_paragraph(doc)


# --- service mode ---------------------------------------------------------------


class _PyramidStub(BaseHTTPRequestHandler):
    dim = 3
    break_dim = False

    def _send(self, payload):
        body = json.dumps(payload).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        assert self.path == "/v1/meta"
        self._send({"pyramid_dim": self.dim})

    def do_POST(self):
        assert self.path == "/v1/pyramid"
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        dim = self.dim - 1 if self.break_dim else self.dim
        self._send(
            {
                "responses": [
                    {"request_id": r["request_id"],
                     "vector": [0.1 * k for k in range(dim)]}
                    for r in payload["requests"]
                ]
            }
        )

    def log_message(self, *args):
        pass


@pytest.fixture
def pyramid_stub():
    handler = type("Handler", (_PyramidStub,), {})
    server = HTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", handler
    server.shutdown()


def test_pyramid_service_mode(three_doc_topic, pyramid_stub):
    url, _ = pyramid_stub
    client = PyramidServiceClient(url)
    assert client.pyramid_dim == 3
    featurizer = PyramidFeaturizer(TfidfModel(three_doc_topic), client)
    assert featurizer.dim == 3
    vec = featurizer.features(["storms"], ["Storms", "flooded"], ["cattle"])
    assert len(vec) == 3


def test_pyramid_service_dimension_drift_errors(three_doc_topic, pyramid_stub):
    url, handler = pyramid_stub
    client = PyramidServiceClient(url)
    handler.break_dim = True
    featurizer = PyramidFeaturizer(TfidfModel(three_doc_topic), client)
    with pytest.raises(FeatureConfigError, match="dimension"):
        featurizer.features(["storms"], ["Storms", "flooded"], ["cattle"])
