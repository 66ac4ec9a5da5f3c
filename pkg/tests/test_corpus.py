import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from plancite.corpus import (
    AnnotatedSummary,
    Passage,
    RecordError,
    Sentence,
    load_records,
    record_from_dict,
    remap_citations,
    rerank_passages,
    save_records,
    segment_sentences,
)
from plancite.scoring import LexicalScorer


def write_lines(tmp_path, lines, name="records.jsonl"):
    path = tmp_path / name
    path.write_text("\n".join(json.dumps(obj) for obj in lines) + "\n", encoding="utf-8")
    return str(path)


class TestLoadRecords:
    def test_inline_summary_becomes_structured(self, tmp_path):
        path = write_lines(tmp_path, [{"query": "q", "passages": ["a", "b"], "summary": "x. [1]"}])
        records = load_records(path)
        assert len(records) == 1
        record = records[0]
        assert len(record.passages) == 2
        assert [s.text for s in record.reference_summary.sentences] == ["x."]
        assert record.reference_summary.sentences[0].citations == [1]

    def test_out_of_range_citation(self, tmp_path):
        path = write_lines(
            tmp_path, [{"id": "bad1", "query": "q", "passages": ["a"], "summary": "x. [3]"}]
        )
        with pytest.raises(RecordError, match="bad1"):
            load_records(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_records(str(path)) == []

    def test_malformed_line_number(self, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"query": "q", "passages": ["a"]}\nnot json\n', encoding="utf-8")
        with pytest.raises(RecordError, match="line 2"):
            load_records(str(path))

    def test_missing_fields(self, tmp_path):
        path = write_lines(tmp_path, [{"query": "q"}])
        with pytest.raises(RecordError, match="passages"):
            load_records(path)

    def test_one_based_citations(self, tmp_path):
        path = write_lines(tmp_path, [{"query": "q", "passages": ["a", "b"], "summary": "x. [1]"}])
        records = load_records(path, citation_base=1)
        assert records[0].reference_summary.sentences[0].citations == [0]

    def test_duplicate_citation_rejected(self, tmp_path):
        path = write_lines(
            tmp_path,
            [{
                "query": "q",
                "passages": ["a", "b"],
                "summary": {"sentences": [{"text": "x.", "citations": [1, 1]}]},
            }],
        )
        with pytest.raises(RecordError, match="twice"):
            load_records(path)

    def test_structured_summary(self, tmp_path):
        path = write_lines(
            tmp_path,
            [{
                "query": "q",
                "passages": ["a"],
                "summary": {"sentences": [{"text": "x.", "citations": [0]}]},
            }],
        )
        records = load_records(path)
        assert records[0].reference_summary.sentences[0].citations == [0]

    def test_extras_preserved(self, tmp_path):
        path = write_lines(
            tmp_path, [{"query": "q", "passages": ["a"], "note": {"x": 1}}]
        )
        records = load_records(path)
        assert records[0].extras == {"note": {"x": 1}}

    def test_passage_with_citation_token_rejected(self):
        with pytest.raises(RecordError, match="citation-shaped"):
            record_from_dict({"query": "q", "passages": ["see [1] here"]})

    def test_load_serialize_load_round_trip(self, tmp_path):
        path = write_lines(
            tmp_path,
            [
                {"id": "a", "query": "q1", "passages": ["pa", "pb"], "summary": "X y. [0] Z w. [1]"},
                {"id": "b", "query": "q2", "passages": ["pc"], "extra_field": [1, 2]},
            ],
        )
        first = load_records(path)
        out = str(tmp_path / "copy.jsonl")
        save_records(first, out)
        second = load_records(out)
        assert first == second


# Thirty hand-segmented fixtures covering terminators, abbreviations,
# digits, and non-splitting punctuation.
SEGMENTATION_FIXTURES = [
    ("A b. C d!", ["A b.", "C d!"]),
    ("Dr. Smith ran.", ["Dr. Smith ran."]),
    ("", []),
    ("One sentence only", ["One sentence only"]),
    ("Stop! Now. Go?", ["Stop!", "Now.", "Go?"]),
    ("What?! Really. Yes.", ["What?!", "Really.", "Yes."]),
    ("Mr. Jones met Mrs. Lee.", ["Mr. Jones met Mrs. Lee."]),
    ("Ms. Ray left. Dr. Wu stayed.", ["Ms. Ray left.", "Dr. Wu stayed."]),
    ("Use tools, e.g. Hammers and saws.", ["Use tools, e.g. Hammers and saws."]),
    ("It failed, i.e. Nothing worked.", ["It failed, i.e. Nothing worked."]),
    ("Bring pens, paper, etc. Then sit.", ["Bring pens, paper, etc. Then sit."]),
    ("Cats vs. Dogs is an old debate.", ["Cats vs. Dogs is an old debate."]),
    ("The U.S. Senate voted.", ["The U.S. Senate voted."]),
    ("Version 2. Then version 3.", ["Version 2.", "Then version 3."]),
    ("Pi is 3.14 exactly here.", ["Pi is 3.14 exactly here."]),
    ("It costs 5. 6 were sold.", ["It costs 5.", "6 were sold."]),
    ("He said stop. now please.", ["He said stop. now please."]),
    ("A. B. C.", ["A.", "B.", "C."]),
    ("Wait... Then go.", ["Wait...", "Then go."]),
    ("Is it done? Yes it is.", ["Is it done?", "Yes it is."]),
    ("Run!Fast ones win.", ["Run!Fast ones win."]),
    ("  Spaced   out.   Very  much. ", ["Spaced out.", "Very much."]),
    ("Lists: one. Two follows.", ["Lists: one.", "Two follows."]),
    ("The end.", ["The end."]),
    ("No terminator at all, just words", ["No terminator at all, just words"]),
    ("First. second stays attached.", ["First. second stays attached."]),
    ("Numbers like 10. 20 split though.", ["Numbers like 10.", "20 split though."]),
    ("Quote done. \"Next\" is lowercase-ish.", ["Quote done. \"Next\" is lowercase-ish."]),
    ("Tabs\tand\nnewlines. Still works.", ["Tabs and newlines.", "Still works."]),
    ("Dr. A saw Mr. B. Then Ms. C left.", ["Dr. A saw Mr. B.", "Then Ms. C left."]),
]


class TestSegmentation:
    @pytest.mark.parametrize("text,expected", SEGMENTATION_FIXTURES)
    def test_hand_fixtures(self, text, expected):
        assert segment_sentences(text) == expected

    @pytest.mark.parametrize("text,expected", SEGMENTATION_FIXTURES)
    def test_idempotent_on_fixture_sentences(self, text, expected):
        for sentence in expected:
            assert segment_sentences(sentence) == [sentence]

    @pytest.mark.parametrize("text,expected", SEGMENTATION_FIXTURES)
    def test_join_reproduces_normalized_input(self, text, expected):
        assert " ".join(expected) == " ".join(text.split())

    def test_custom_abbreviations(self):
        assert segment_sentences("See fig. Two for details.", abbreviations=("fig.",)) == [
            "See fig. Two for details."
        ]
        assert segment_sentences("See fig. Two for details.", abbreviations=()) == [
            "See fig.",
            "Two for details.",
        ]

    @given(st.text(alphabet=st.sampled_from(list("abcZ .!?")), max_size=60))
    def test_idempotence_property(self, text):
        once = segment_sentences(text)
        for sentence in once:
            assert segment_sentences(sentence) == [sentence]

    @given(st.text(alphabet=st.sampled_from(list("abcZ .!?\n\t")), max_size=60))
    def test_no_empty_sentences_and_join_property(self, text):
        segs = segment_sentences(text)
        assert all(s for s in segs)
        assert " ".join(segs) == " ".join(text.split())


def passages(*texts):
    return [Passage(id=i, text=t) for i, t in enumerate(texts)]


class TestRerank:
    def test_sorts_by_score(self):
        scores = {"a": 0.1, "b": 0.9}
        ranked, id_map = rerank_passages("q", passages("a", "b"), lambda q, p: scores[p])
        assert [p.text for p in ranked] == ["b", "a"]
        assert id_map == {0: 1, 1: 0}

    def test_stable_on_ties(self):
        ranked, id_map = rerank_passages("q", passages("a", "b", "c"), lambda q, p: 1.0)
        assert [p.text for p in ranked] == ["a", "b", "c"]
        assert id_map == {0: 0, 1: 1, 2: 2}

    def test_lexical_scorer_prefers_matching_passage(self):
        scorer = LexicalScorer()
        ranked, _ = rerank_passages(
            "pulmonary veins",
            passages("nothing about anatomy topics", "the pulmonary veins move blood"),
            scorer.relevance,
        )
        assert ranked[0].text == "the pulmonary veins move blood"

    def test_scorer_failure_carries_passage_index(self):
        def broken(q, p):
            raise RuntimeError("boom")

        with pytest.raises(RecordError, match="passage 0"):
            rerank_passages("q", passages("a"), broken)

    def test_non_finite_score_rejected(self):
        with pytest.raises(RecordError, match="non-finite"):
            rerank_passages("q", passages("a"), lambda q, p: float("nan"))

    @given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=8))
    def test_is_a_permutation_with_bijective_map(self, scores):
        texts = [f"passage {i}" for i in range(len(scores))]
        ranked, id_map = rerank_passages(
            "q", passages(*texts), lambda q, p: scores[texts.index(p)]
        )
        assert sorted(p.text for p in ranked) == sorted(texts)
        assert [p.id for p in ranked] == list(range(len(texts)))
        assert sorted(id_map.keys()) == list(range(len(texts)))
        assert sorted(id_map.values()) == list(range(len(texts)))

    def test_remap_citations(self):
        summary = AnnotatedSummary([Sentence(0, "x.", [0, 2]), Sentence(1, "y.", [])])
        remapped = remap_citations(summary, {0: 2, 1: 0, 2: 1})
        assert remapped.sentences[0].citations == [2, 1]
        assert remapped.sentences[1].citations == []
