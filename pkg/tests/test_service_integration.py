"""Optional integration against a live scorer service.

The core suite never needs the service (fallback and file sources cover
everything); these tests only run when HILITE_SCORER_URL points at a
running instance, e.g.:

    cd frontend && npm run build && node dist/src/index.js --port 8071 &
    HILITE_SCORER_URL=http://127.0.0.1:8071 pytest tests/test_service_integration.py
"""

import os
import urllib.error
import urllib.request

import pytest

from hilite.features import PyramidFeaturizer, PyramidServiceClient, TfidfModel
from hilite.scores import HttpScoreSource, ScoreRequest

SERVICE_URL = os.environ.get("HILITE_SCORER_URL")


def _service_available() -> bool:
    if not SERVICE_URL:
        return False
    try:
        with urllib.request.urlopen(SERVICE_URL.rstrip("/") + "/v1/meta", timeout=2):
            return True
    except (urllib.error.URLError, OSError):
        return False


pytestmark = pytest.mark.skipif(
    not _service_available(), reason="no scorer service at HILITE_SCORER_URL"
)


def test_score_contract_round_trip():
    source = HttpScoreSource(SERVICE_URL)
    tokens = ("storms", "closed", "nine", "bridges", "on", "Friday")
    requests = [ScoreRequest(f"r{k}", tokens, (k, k + 3)) for k in range(3)]
    responses = source.score_spans(requests)
    assert [r.request_id for r in responses] == ["r0", "r1", "r2"]
    for r in responses:
        assert 0.0 <= r.p_start <= 1.0
        assert 0.0 <= r.p_end <= 1.0
    assert source.score_spans(requests) == responses


def test_pyramid_contract_round_trip(toy_topics):
    client = PyramidServiceClient(SERVICE_URL)
    featurizer = PyramidFeaturizer(TfidfModel(toy_topics[0]), client)
    vec = featurizer.features(["storms", "closed"], ["storms", "closed", "nine"], ["x"])
    assert len(vec) == client.pyramid_dim
    assert all(abs(v) <= 1.0 for v in vec)
