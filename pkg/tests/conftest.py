import pathlib

import pytest

from hilite import corpus

DATA_DIR = pathlib.Path(__file__).resolve().parent.parent / "data" / "toy"


@pytest.fixture(scope="session")
def toy_corpus_path() -> str:
    return str(DATA_DIR / "topics.jsonl")


@pytest.fixture(scope="session")
def flood_parses_path() -> str:
    return str(DATA_DIR / "parses_flood.jsonl")


@pytest.fixture(scope="session")
def toy_topics(toy_corpus_path):
    return corpus.load_topics(toy_corpus_path)
