"""Pluggable scorers: lexical oracles and a remote HTTP backend.

Four capabilities share one contract: entailment, answerability, question
generation, and query/passage relevance. The lexical backend is a pure,
deterministic oracle meant for tests and desk-scale runs; the remote backend
talks to a scorer service over HTTP (see ``WIRE_PROTOCOL`` below) and is
interchangeable with the lexical one everywhere downstream.

Token normalization is defined once here and reused by the metrics module.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass

import requests

# Articles, be-forms, and short prepositions. Deliberately small and fixed so
# every score in the toolkit is reproducible by hand.
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

QG_GENERAL_PREFIX = "Generate question >>> "
QG_SENTENCE_SEPARATOR = " >> "
ANSWERABLE_TEMPLATE = "question: {question} context: {context}"

DEFAULT_THRESHOLD = 0.5
DEFAULT_BATCH_SIZE = 32

STYLES = ("general", "specific")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation, split on whitespace."""
    return _PUNCT.sub("", text.lower()).split()


def content_tokens(text: str) -> list[str]:
    """Tokens with the stopword list removed (duplicates kept, order kept)."""
    return [t for t in tokenize(text) if t not in STOPWORDS]


def content_token_set(text: str) -> set[str]:
    return set(content_tokens(text))


def _matches(token: str, vocabulary: set[str]) -> bool:
    # Tolerate a trailing plural/3rd-person "s" in either direction. Used by
    # the answerability matcher only; overlap and entailment stay exact.
    if token in vocabulary:
        return True
    if len(token) >= 4 and token.endswith("s") and not token.endswith("ss"):
        if token[:-1] in vocabulary:
            return True
    return token + "s" in vocabulary


def lexical_overlap(a: str, b: str) -> float:
    """Unigram F1 between the content-token sets of two strings.

    Symmetric; 0.0 when either side has no content tokens.
    """
    sa, sb = content_token_set(a), content_token_set(b)
    if not sa or not sb:
        return 0.0
    inter = len(sa & sb)
    return 2.0 * inter / (len(sa) + len(sb))


def qg_prompt(passage: str, sentence: str | None = None) -> str:
    """The exact text a question-generation model receives.

    General-purpose requests carry only the passage; sentence-specific
    requests append the sentence after a fixed separator.
    """
    if sentence is None:
        return QG_GENERAL_PREFIX + passage
    return QG_GENERAL_PREFIX + passage + QG_SENTENCE_SEPARATOR + sentence


def answerable_prompt(question: str, context: str) -> str:
    """The exact text an answerability classifier receives."""
    return ANSWERABLE_TEMPLATE.format(question=question, context=context)


@dataclass
class EntailmentJudgment:
    score: float
    entailed: bool


@dataclass(frozen=True)
class QuestionOrigin:
    """Where a question came from: a summary sentence, the whole summary, or
    a passage. ``index`` is the sentence index or passage id; None for the
    summary level."""

    kind: str  # "sentence" | "summary" | "passage"
    index: int | None = None


@dataclass(frozen=True)
class Question:
    text: str
    style: str = "general"
    origin: QuestionOrigin | None = None

    def dedup_key(self) -> tuple[str, ...]:
        return tuple(tokenize(self.text))


def dedup_questions(questions: list[Question]) -> list[Question]:
    """Drop questions whose normalized token sequence was already seen."""
    seen: set[tuple[str, ...]] = set()
    out = []
    for q in questions:
        key = q.dedup_key()
        if key not in seen:
            seen.add(key)
            out.append(q)
    return out


class ScorerError(RuntimeError):
    """A scorer backend failed (transport, protocol, or precondition)."""


class Scorer:
    """Backend contract. Batch methods default to looping the single-item
    ones; backends with real batching override them."""

    def entail(self, premise: str, hypothesis: str) -> EntailmentJudgment:
        raise NotImplementedError

    def answerable(self, question: str, context: str) -> EntailmentJudgment:
        raise NotImplementedError

    def generate_questions(
        self,
        passage: str,
        sentence: str | None = None,
        count: int = 10,
        style: str = "general",
    ) -> list[Question]:
        raise NotImplementedError

    def relevance(self, query: str, passage: str) -> float:
        raise NotImplementedError

    def entail_batch(self, pairs: list[tuple[str, str]]) -> list[EntailmentJudgment]:
        return [self.entail(p, h) for p, h in pairs]

    def answerable_batch(self, pairs: list[tuple[str, str]]) -> list[EntailmentJudgment]:
        return [self.answerable(q, c) for q, c in pairs]

    def relevance_batch(self, query: str, passages: list[str]) -> list[float]:
        return [self.relevance(query, p) for p in passages]


class LexicalScorer(Scorer):
    """Deterministic oracle backend built on token overlap.

    entail:     fraction of hypothesis content tokens present in the premise.
    answerable: recall of question content tokens (wh-words and auxiliaries
                removed, plural-s tolerated) in the context.
    relevance:  entailment of the query by the passage.
    generate:   sliding-window template questions over content tokens; only
                meant to give downstream stages deterministic input.
    """

    def __init__(self, threshold: float = DEFAULT_THRESHOLD):
        if not 0.0 <= threshold <= 1.0:
            raise ValueError(f"threshold must be in [0,1], got {threshold}")
        self.threshold = threshold

    def _judge(self, score: float) -> EntailmentJudgment:
        return EntailmentJudgment(score=score, entailed=score >= self.threshold)

    def entail(self, premise: str, hypothesis: str) -> EntailmentJudgment:
        if not premise.strip() or not hypothesis.strip():
            raise ScorerError("entail requires non-empty premise and hypothesis")
        hyp = content_tokens(hypothesis)
        if not hyp:
            return self._judge(0.0)
        prem = content_token_set(premise)
        covered = sum(1 for t in set(hyp) if t in prem)
        return self._judge(covered / len(set(hyp)))

    def answerable(self, question: str, context: str) -> EntailmentJudgment:
        if not question.strip() or not context.strip():
            raise ScorerError("answerable requires non-empty question and context")
        tokens = [
            t
            for t in content_token_set(question)
            if t not in WH_WORDS and t not in AUXILIARIES
        ]
        if not tokens:
            return self._judge(0.0)
        ctx = content_token_set(context)
        covered = sum(1 for t in tokens if _matches(t, ctx))
        return self._judge(covered / len(tokens))

    def generate_questions(
        self,
        passage: str,
        sentence: str | None = None,
        count: int = 10,
        style: str = "general",
    ) -> list[Question]:
        if style not in STYLES:
            raise ValueError(f"unknown question style: {style!r}")
        if not passage.strip():
            raise ScorerError("generate_questions requires a non-empty passage")
        if style == "specific" and sentence is None:
            raise ScorerError("specific style requires a sentence")
        if count <= 0:
            return []
        source = sentence if style == "specific" else passage
        tokens = content_tokens(source)
        if not tokens:
            return []
        width = min(4, len(tokens))
        questions = []
        for start in range(len(tokens) - width + 1):
            window = " ".join(tokens[start : start + width])
            questions.append(Question(text=f"what is {window}?", style=style))
        return dedup_questions(questions)[:count]

    def relevance(self, query: str, passage: str) -> float:
        return self.entail(passage, query).score


class RemoteScorer(Scorer):
    """Client for the scorer service wire protocol.

    One POST endpoint per capability, each accepting a batch; requests larger
    than ``batch_size`` are split. Transport failures are retried up to
    ``max_retries`` times and then surfaced as ScorerError with the retry
    count. ``max_in_flight`` caps concurrent requests across threads.
    """

    def __init__(
        self,
        base_url: str,
        threshold: float = DEFAULT_THRESHOLD,
        batch_size: int = DEFAULT_BATCH_SIZE,
        max_retries: int = 3,
        timeout: float = 60.0,
        max_in_flight: int = 8,
        session: requests.Session | None = None,
    ):
        if batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        self.base_url = base_url.rstrip("/")
        self.threshold = threshold
        self.batch_size = batch_size
        self.max_retries = max_retries
        self.timeout = timeout
        self._session = session or requests.Session()
        self._gate = threading.Semaphore(max_in_flight)

    def _post(self, endpoint: str, body: dict) -> dict:
        url = f"{self.base_url}{endpoint}"
        last_error: Exception | None = None
        for attempt in range(1, self.max_retries + 1):
            try:
                with self._gate:
                    resp = self._session.post(url, json=body, timeout=self.timeout)
                resp.raise_for_status()
                return resp.json()
            except (requests.RequestException, ValueError) as exc:
                last_error = exc
        raise ScorerError(
            f"{endpoint} failed after {self.max_retries} attempts: {last_error}"
        )

    @staticmethod
    def _field(response: dict, key: str, endpoint: str) -> list:
        try:
            value = response[key]
        except (KeyError, TypeError):
            raise ScorerError(f"{endpoint} response missing {key!r}") from None
        if not isinstance(value, list):
            raise ScorerError(f"{endpoint} response field {key!r} is not a list")
        return value

    def meta(self) -> dict:
        try:
            resp = self._session.get(f"{self.base_url}/meta", timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise ScorerError(f"/meta failed: {exc}") from exc

    def _judge(self, score: float) -> EntailmentJudgment:
        return EntailmentJudgment(score=score, entailed=score >= self.threshold)

    def entail(self, premise: str, hypothesis: str) -> EntailmentJudgment:
        return self.entail_batch([(premise, hypothesis)])[0]

    def entail_batch(self, pairs: list[tuple[str, str]]) -> list[EntailmentJudgment]:
        out: list[EntailmentJudgment] = []
        for chunk in _chunks(pairs, self.batch_size):
            body = {"pairs": [{"premise": p, "hypothesis": h} for p, h in chunk]}
            scores = self._field(self._post("/entail", body), "scores", "/entail")
            if len(scores) != len(chunk):
                raise ScorerError("/entail returned a mis-sized batch")
            out.extend(self._judge(float(s)) for s in scores)
        return out

    def answerable(self, question: str, context: str) -> EntailmentJudgment:
        return self.answerable_batch([(question, context)])[0]

    def answerable_batch(self, pairs: list[tuple[str, str]]) -> list[EntailmentJudgment]:
        out: list[EntailmentJudgment] = []
        for chunk in _chunks(pairs, self.batch_size):
            body = {"pairs": [{"question": q, "context": c} for q, c in chunk]}
            resp = self._post("/answerable", body)
            labels = self._field(resp, "labels", "/answerable")
            scores = self._field(resp, "scores", "/answerable")
            if len(labels) != len(chunk) or len(scores) != len(chunk):
                raise ScorerError("/answerable returned a mis-sized batch")
            out.extend(
                EntailmentJudgment(score=float(s), entailed=label == "Yes")
                for label, s in zip(labels, scores)
            )
        return out

    def generate_questions(
        self,
        passage: str,
        sentence: str | None = None,
        count: int = 10,
        style: str = "general",
    ) -> list[Question]:
        if style not in STYLES:
            raise ValueError(f"unknown question style: {style!r}")
        if count <= 0:
            return []
        item: dict = {"passage": passage, "style": style, "count": count}
        if sentence is not None:
            item["sentence"] = sentence
        resp = self._post("/generate", {"items": [item]})
        questions = self._field(resp, "questions", "/generate")
        if len(questions) != 1:
            raise ScorerError("/generate returned a mis-sized batch")
        texts = questions[0]
        return dedup_questions([Question(text=t, style=style) for t in texts])[:count]

    def relevance(self, query: str, passage: str) -> float:
        return self.relevance_batch(query, [passage])[0]

    def relevance_batch(self, query: str, passages: list[str]) -> list[float]:
        out: list[float] = []
        for chunk in _chunks(passages, self.batch_size):
            resp = self._post("/rerank", {"query": query, "passages": list(chunk)})
            scores = self._field(resp, "scores", "/rerank")
            if len(scores) != len(chunk):
                raise ScorerError("/rerank returned a mis-sized batch")
            out.extend(float(s) for s in scores)
        return out


def _chunks(items, size):
    for i in range(0, len(items), size):
        yield items[i : i + size]


# ---------------------------------------------------------------------------
# Protocol reference, shared with the contract-test fixtures.

WIRE_PROTOCOL = {
    "/entail": {"request": {"pairs": [{"premise": "...", "hypothesis": "..."}]},
                "response": {"scores": [0.0]}},
    "/answerable": {"request": {"pairs": [{"question": "...", "context": "..."}]},
                    "response": {"labels": ["Yes"], "scores": [0.0]}},
    "/generate": {"request": {"items": [{"passage": "...", "sentence": "...",
                                         "style": "general", "count": 1}]},
                  "response": {"questions": [["..."]]}},
    "/rerank": {"request": {"query": "...", "passages": ["..."]},
                "response": {"scores": [0.0]}},
    "/meta": {"response": {"capabilities": ["..."], "version": "..."}},
}


def handle_protocol_request(endpoint: str, body: dict, scorer: Scorer) -> dict:
    """Answer a wire-protocol request with an in-process scorer.

    Lets the lexical oracle stand in for the remote service, both in tests
    and behind a loopback HTTP server.
    """
    if endpoint == "/entail":
        judgments = scorer.entail_batch(
            [(p["premise"], p["hypothesis"]) for p in body["pairs"]]
        )
        return {"scores": [j.score for j in judgments]}
    if endpoint == "/answerable":
        judgments = scorer.answerable_batch(
            [(p["question"], p["context"]) for p in body["pairs"]]
        )
        return {
            "labels": ["Yes" if j.entailed else "No" for j in judgments],
            "scores": [j.score for j in judgments],
        }
    if endpoint == "/generate":
        questions = []
        for item in body["items"]:
            qs = scorer.generate_questions(
                item["passage"],
                sentence=item.get("sentence"),
                count=item["count"],
                style=item["style"],
            )
            questions.append([q.text for q in qs])
        return {"questions": questions}
    if endpoint == "/rerank":
        return {"scores": scorer.relevance_batch(body["query"], body["passages"])}
    if endpoint == "/meta":
        return {"capabilities": ["entail", "answerable", "generate", "rerank"],
                "version": "1"}
    raise ScorerError(f"unknown endpoint: {endpoint}")
