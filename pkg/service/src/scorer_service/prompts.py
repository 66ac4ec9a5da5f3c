"""Model input formatting.

These templates are the service's contract with its models: every backend
receives exactly these strings. The stub backend parses them back, which
doubles as a check that the formatting carries all request fields.
"""

from __future__ import annotations

QG_PREFIX = "Generate question >>> "
QG_SENTENCE_SEP = " >> "
ANSWERABLE_TEMPLATE = "question: {question} context: {context}"
ANSWERABLE_QUESTION_PREFIX = "question: "
ANSWERABLE_CONTEXT_SEP = " context: "


def generate_prompt(passage: str, sentence: str | None = None) -> str:
    """General-purpose QG prompt, or the sentence-specific variant when a
    sentence is given."""
    if sentence is None:
        return QG_PREFIX + passage
    return QG_PREFIX + passage + QG_SENTENCE_SEP + sentence


def parse_generate_prompt(prompt: str) -> tuple[str, str | None]:
    if not prompt.startswith(QG_PREFIX):
        raise ValueError("not a question-generation prompt")
    rest = prompt[len(QG_PREFIX):]
    if QG_SENTENCE_SEP in rest:
        passage, sentence = rest.split(QG_SENTENCE_SEP, 1)
        return passage, sentence
    return rest, None


def answerable_prompt(question: str, context: str) -> str:
    return ANSWERABLE_TEMPLATE.format(question=question, context=context)


def parse_answerable_prompt(prompt: str) -> tuple[str, str]:
    if not prompt.startswith(ANSWERABLE_QUESTION_PREFIX):
        raise ValueError("not an answerability prompt")
    rest = prompt[len(ANSWERABLE_QUESTION_PREFIX):]
    if ANSWERABLE_CONTEXT_SEP not in rest:
        raise ValueError("answerability prompt lacks a context")
    question, context = rest.split(ANSWERABLE_CONTEXT_SEP, 1)
    return question, context
