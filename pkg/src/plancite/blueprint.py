"""Question-blueprint construction.

Abstractive blueprints pick, for each summary sentence, the overgenerated
question with the highest lexical overlap against that sentence, drawing from
the union of its sentence-specific candidates and the summary-level ones.
Extractive blueprints copy questions verbatim from per-passage question sets:
candidates are first filtered by an answerability classifier against the full
summary, then matched to sentences by overlap, each question used at most
once. Provenance of extractive questions is kept so attribution can be read
off the blueprint.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

from plancite.corpus import AnnotatedSummary, Passage, segment_sentences
from plancite.scoring import (
    Question,
    QuestionOrigin,
    Scorer,
    ScorerError,
    dedup_questions,
    lexical_overlap,
)

logger = logging.getLogger(__name__)

DEFAULT_PER_SENTENCE = 10
DEFAULT_SUMMARY_LEVEL = 10
DEFAULT_PER_PASSAGE = 5
DEFAULT_MMR_LAMBDA = 1.0


@dataclass
class BlueprintConfig:
    per_sentence: int = DEFAULT_PER_SENTENCE
    summary_level: int = DEFAULT_SUMMARY_LEVEL
    per_passage: int = DEFAULT_PER_PASSAGE
    mmr_lambda: float = DEFAULT_MMR_LAMBDA

    def validate(self) -> None:
        if min(self.per_sentence, self.summary_level, self.per_passage) < 0:
            raise ValueError("question budgets must be >= 0")


@dataclass
class BlueprintEntry:
    sentence_index: int
    questions: list[Question]


@dataclass
class Blueprint:
    entries: list[BlueprintEntry]
    kind: str  # "abstractive" | "extractive"

    def validate(self, n_sentences: int) -> None:
        last = -1
        for entry in self.entries:
            if not 0 <= entry.sentence_index < n_sentences:
                raise ValueError(f"entry for nonexistent sentence {entry.sentence_index}")
            if entry.sentence_index <= last:
                raise ValueError("entries must be strictly increasing by sentence index")
            if not entry.questions:
                raise ValueError(f"entry {entry.sentence_index} has no questions")
            last = entry.sentence_index


@dataclass
class PassageQuestions:
    passage_id: int
    questions: list[Question]


@dataclass
class QuestionPool:
    per_sentence: dict[int, list[Question]] = field(default_factory=dict)
    summary_level: list[Question] = field(default_factory=list)


class QuestionGenerationError(RuntimeError):
    """Question generation failed for some pool items; lists the failures."""

    def __init__(self, failures: list[tuple[str, Exception]]):
        self.failures = failures
        detail = "; ".join(f"{name}: {exc}" for name, exc in failures)
        super().__init__(f"question generation failed for {len(failures)} item(s): {detail}")


def _tag(questions: list[Question], origin: QuestionOrigin) -> list[Question]:
    return [Question(text=q.text, style=q.style, origin=origin) for q in questions]


def build_question_pool(
    summary: AnnotatedSummary, qg: Scorer, config: BlueprintConfig | None = None
) -> QuestionPool:
    """Overgenerate candidate questions for a summary.

    Each sentence gets up to ``per_sentence`` questions per style and the
    whole summary gets up to ``summary_level`` per style; duplicates within a
    bucket are removed by normalized token sequence. Failed generator calls
    are collected and reported together.
    """
    config = config or BlueprintConfig()
    config.validate()
    summary_text = summary.text()
    pool = QuestionPool()
    failures: list[tuple[str, Exception]] = []

    for s in summary.sentences:
        questions: list[Question] = []
        for style, passage, sentence in (
            ("specific", summary_text, s.text),
            ("general", s.text, None),
        ):
            try:
                got = qg.generate_questions(
                    passage, sentence=sentence, count=config.per_sentence, style=style
                )
            except ScorerError as exc:
                failures.append((f"sentence {s.index} ({style})", exc))
                continue
            questions.extend(_tag(got, QuestionOrigin(kind="sentence", index=s.index)))
        pool.per_sentence[s.index] = dedup_questions(questions)

    summary_questions: list[Question] = []
    for style, sentence in (("general", None), ("specific", summary_text)):
        try:
            got = qg.generate_questions(
                summary_text, sentence=sentence, count=config.summary_level, style=style
            )
        except ScorerError as exc:
            failures.append((f"summary ({style})", exc))
            continue
        summary_questions.extend(_tag(got, QuestionOrigin(kind="summary")))
    pool.summary_level = dedup_questions(summary_questions)

    if failures:
        raise QuestionGenerationError(failures)
    return pool


def select_abstractive_blueprint(summary: AnnotatedSummary, pool: QuestionPool) -> Blueprint:
    """One question per sentence, by highest overlap with the sentence text.

    Candidates are the sentence's own pool followed by the summary-level
    pool; ties keep the earliest candidate. Sentences with no candidates are
    skipped with a warning.
    """
    entries = []
    for s in summary.sentences:
        candidates = list(pool.per_sentence.get(s.index, [])) + list(pool.summary_level)
        if not candidates:
            logger.warning("no question candidates for sentence %d; entry omitted", s.index)
            continue
        best = max(candidates, key=lambda q: lexical_overlap(q.text, s.text))
        entries.append(BlueprintEntry(sentence_index=s.index, questions=[best]))
    return Blueprint(entries=entries, kind="abstractive")


def select_passage_questions(
    passage: Passage,
    candidates: list[Question],
    budget: int = DEFAULT_PER_PASSAGE,
    mmr_lambda: float = DEFAULT_MMR_LAMBDA,
) -> PassageQuestions:
    """Greedy relevant-but-diverse selection of passage questions.

    At each step picks the candidate maximizing
    ``overlap(q, passage) - lambda * max over selected of overlap(q, s)``,
    breaking ties by candidate order, until the budget is exhausted.
    """
    for q in candidates:
        if q.origin is None or q.origin.kind != "passage" or q.origin.index != passage.id:
            raise ValueError(f"candidate {q.text!r} does not originate from passage {passage.id}")
    relevance = [lexical_overlap(q.text, passage.text) for q in candidates]
    selected: list[int] = []
    remaining = list(range(len(candidates)))
    while remaining and len(selected) < budget:
        best_i, best_score = None, None
        for i in remaining:
            penalty = max(
                (lexical_overlap(candidates[i].text, candidates[j].text) for j in selected),
                default=0.0,
            )
            score = relevance[i] - mmr_lambda * penalty
            if best_score is None or score > best_score:
                best_i, best_score = i, score
        selected.append(best_i)
        remaining.remove(best_i)
    return PassageQuestions(
        passage_id=passage.id, questions=[candidates[i] for i in selected]
    )


def build_passage_questions(
    passages: list[Passage], qg: Scorer, config: BlueprintConfig | None = None
) -> list[PassageQuestions]:
    """Overgenerate and greedily select questions for every passage.

    Mirrors the summary-side pool: sentence-specific questions for each
    passage sentence plus passage-level ones in both styles, deduplicated,
    then reduced to ``per_passage`` by the greedy diverse selection.
    """
    config = config or BlueprintConfig()
    config.validate()
    out = []
    failures: list[tuple[str, Exception]] = []
    for passage in passages:
        origin = QuestionOrigin(kind="passage", index=passage.id)
        candidates: list[Question] = []
        try:
            for sent in segment_sentences(passage.text):
                candidates.extend(
                    qg.generate_questions(
                        passage.text, sentence=sent, count=config.per_sentence,
                        style="specific",
                    )
                )
            candidates.extend(
                qg.generate_questions(passage.text, count=config.summary_level, style="general")
            )
            candidates.extend(
                qg.generate_questions(
                    passage.text, sentence=passage.text, count=config.summary_level,
                    style="specific",
                )
            )
        except ScorerError as exc:
            failures.append((f"passage {passage.id}", exc))
            continue
        candidates = dedup_questions(_tag(candidates, origin))
        out.append(
            select_passage_questions(
                passage, candidates, budget=config.per_passage,
                mmr_lambda=config.mmr_lambda,
            )
        )
    if failures:
        raise QuestionGenerationError(failures)
    return out


class AnswerabilityError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"answerability classifier failed on question {index}: {cause}")
        self.index = index


def filter_answerable(questions: list[Question], target: str, clf: Scorer) -> list[Question]:
    """Keep the questions the classifier judges answerable from ``target``.

    Order-preserving subset of the input.
    """
    kept = []
    for i, q in enumerate(questions):
        try:
            judgment = clf.answerable(q.text, target)
        except Exception as exc:
            raise AnswerabilityError(i, exc) from exc
        if judgment.entailed:
            kept.append(q)
    return kept


def select_extractive_blueprint(
    summary: AnnotatedSummary,
    passage_questions: list[PassageQuestions],
    clf: Scorer,
    config: BlueprintConfig | None = None,
) -> Blueprint:
    """Copy one passage question per sentence.

    Pools all passage questions (passage order, then in-passage order),
    drops the ones not answerable from the full summary, then assigns each
    sentence the surviving question with the highest overlap against that
    sentence, never reusing a question. Provenance rides along on the
    question origins.
    """
    pooled: list[Question] = []
    for pq in passage_questions:
        pooled.extend(pq.questions)
    survivors = filter_answerable(pooled, summary.text(), clf)
    used: set[int] = set()
    entries = []
    for s in summary.sentences:
        best_i, best_score = None, None
        for i, q in enumerate(survivors):
            if i in used:
                continue
            score = lexical_overlap(q.text, s.text)
            if best_score is None or score > best_score:
                best_i, best_score = i, score
        if best_i is None:
            logger.warning("no surviving question for sentence %d; entry omitted", s.index)
            continue
        used.add(best_i)
        entries.append(BlueprintEntry(sentence_index=s.index, questions=[survivors[best_i]]))
    return Blueprint(entries=entries, kind="extractive")


def filter_blueprint_posthoc(bp: Blueprint, passages: list[Passage], clf: Scorer) -> Blueprint:
    """Drop blueprint entries whose questions the passages cannot answer.

    The context is the concatenation of all passage texts; an entry survives
    only if every one of its questions is answerable. The resulting blueprint
    may have gaps.
    """
    context = " ".join(p.text for p in passages)
    entries = []
    for entry in bp.entries:
        judgments = [clf.answerable(q.text, context) for q in entry.questions]
        if all(j.entailed for j in judgments):
            entries.append(entry)
    return Blueprint(entries=entries, kind=bp.kind)


def provenance_index(passage_questions: list[PassageQuestions]) -> dict[str, int]:
    """Question text -> passage id, for re-binding parsed implicit targets.

    First passage wins if the same text somehow appears under two passages.
    """
    index: dict[str, int] = {}
    for pq in passage_questions:
        for q in pq.questions:
            index.setdefault(q.text, pq.passage_id)
    return index


def render_training_target(bp: Blueprint | None, summary: AnnotatedSummary, format: str):
    """Serialize blueprint and summary as one decoder target string."""
    from plancite import formats  # deferred: formats imports this module

    return formats.render(bp, summary, format)


# --- JSON shapes, used by the record files the pipeline writes ------------


def question_to_dict(q: Question) -> dict:
    obj: dict = {"text": q.text, "style": q.style}
    if q.origin is not None:
        obj["origin"] = {"kind": q.origin.kind, "index": q.origin.index}
    return obj


def question_from_dict(obj: dict) -> Question:
    origin = None
    if obj.get("origin") is not None:
        origin = QuestionOrigin(kind=obj["origin"]["kind"], index=obj["origin"].get("index"))
    return Question(text=obj["text"], style=obj.get("style", "general"), origin=origin)


def blueprint_to_dict(bp: Blueprint) -> dict:
    return {
        "kind": bp.kind,
        "entries": [
            {
                "sentence_index": e.sentence_index,
                "questions": [question_to_dict(q) for q in e.questions],
            }
            for e in bp.entries
        ],
    }


def blueprint_from_dict(obj: dict) -> Blueprint:
    return Blueprint(
        kind=obj["kind"],
        entries=[
            BlueprintEntry(
                sentence_index=e["sentence_index"],
                questions=[question_from_dict(q) for q in e["questions"]],
            )
            for e in obj["entries"]
        ],
    )


def passage_questions_to_dict(items: list[PassageQuestions]) -> list[dict]:
    return [
        {"passage_id": pq.passage_id, "questions": [question_to_dict(q) for q in pq.questions]}
        for pq in items
    ]


def passage_questions_from_dict(objs: list[dict]) -> list[PassageQuestions]:
    return [
        PassageQuestions(
            passage_id=o["passage_id"],
            questions=[question_from_dict(q) for q in o["questions"]],
        )
        for o in objs
    ]
