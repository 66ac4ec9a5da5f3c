"""Deterministic token-overlap scoring for the stub backend.

The rules (normalization, stopword list, score formulas) intentionally match
the plancite package's lexical oracle so the two backends are
interchangeable; the shared contract fixtures under ../contracts pin the
behavior on both sides.
"""

from __future__ import annotations

import re

STOPWORDS = frozenset(
    ["a", "an", "the"]
    + ["am", "is", "are", "was", "were", "be", "been", "being"]
    + ["of", "to", "in", "on", "at", "by", "for", "off", "out", "up", "via", "per", "as"]
)

WH_WORDS = frozenset(
    ["what", "which", "who", "whom", "whose", "when", "where", "why", "how"]
)

AUXILIARIES = frozenset(
    ["do", "does", "did", "can", "could", "may", "might", "must",
     "shall", "should", "will", "would", "have", "has", "had"]
)

_PUNCT = re.compile(r"[^\w\s]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _PUNCT.sub("", text.lower()).split()


def content_tokens(text: str) -> list[str]:
    return [t for t in tokenize(text) if t not in STOPWORDS]


def _matches(token: str, vocabulary: set[str]) -> bool:
    if token in vocabulary:
        return True
    if len(token) >= 4 and token.endswith("s") and not token.endswith("ss"):
        if token[:-1] in vocabulary:
            return True
    return token + "s" in vocabulary


def entail_score(premise: str, hypothesis: str) -> float:
    """Fraction of hypothesis content tokens present in the premise."""
    hyp = content_tokens(hypothesis)
    if not hyp:
        return 0.0
    prem = set(content_tokens(premise))
    covered = sum(1 for t in set(hyp) if t in prem)
    return covered / len(set(hyp))


def answerable_score(question: str, context: str) -> float:
    """Recall of question content tokens (wh-words and auxiliaries removed,
    plural-s tolerated) in the context."""
    tokens = [
        t
        for t in set(content_tokens(question))
        if t not in WH_WORDS and t not in AUXILIARIES
    ]
    if not tokens:
        return 0.0
    ctx = set(content_tokens(context))
    covered = sum(1 for t in tokens if _matches(t, ctx))
    return covered / len(tokens)


def template_questions(source: str, count: int) -> list[str]:
    """Sliding-window template questions over the content tokens."""
    if count <= 0:
        return []
    tokens = content_tokens(source)
    if not tokens:
        return []
    width = min(4, len(tokens))
    questions = []
    seen = set()
    for start in range(len(tokens) - width + 1):
        text = "what is " + " ".join(tokens[start : start + width]) + "?"
        key = tuple(tokenize(text))
        if key not in seen:
            seen.add(key)
            questions.append(text)
    return questions[:count]
