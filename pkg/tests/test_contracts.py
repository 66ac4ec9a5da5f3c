"""The frozen wire-protocol fixtures must be reproduced by the in-process
lexical oracle adapter. The scorer service's stub backend runs the same
fixtures in its own test suite, which is what makes the two backends
interchangeable."""

import json
import pathlib

import pytest

from plancite.scoring import LexicalScorer, handle_protocol_request

FIXTURES = pathlib.Path(__file__).parent.parent / "contracts" / "fixtures_v1.json"


@pytest.fixture(scope="module")
def fixtures():
    return json.loads(FIXTURES.read_text())


def test_fixture_file_shape(fixtures):
    assert fixtures["version"] == 1
    assert len(fixtures["shared_answerable"]) == 50
    assert {c["endpoint"] for c in fixtures["cases"]} == {
        "/entail", "/answerable", "/generate", "/rerank"
    }


def test_cases_reproduced_by_lexical_adapter(fixtures):
    scorer = LexicalScorer()
    for case in fixtures["cases"]:
        got = handle_protocol_request(case["endpoint"], case["request"], scorer)
        assert got == case["response"], case["endpoint"]


def test_shared_answerable_fixtures_have_both_labels(fixtures):
    labels = {s["label"] for s in fixtures["shared_answerable"]}
    assert labels == {"Yes", "No"}


def test_shared_answerable_matches_oracle(fixtures):
    scorer = LexicalScorer()
    for item in fixtures["shared_answerable"]:
        judgment = scorer.answerable(item["question"], item["context"])
        assert ("Yes" if judgment.entailed else "No") == item["label"]
        assert judgment.score == item["score"]


def test_meta_shape():
    meta = handle_protocol_request("/meta", {}, LexicalScorer())
    assert set(meta["capabilities"]) == {"entail", "answerable", "generate", "rerank"}
    assert meta["version"]
