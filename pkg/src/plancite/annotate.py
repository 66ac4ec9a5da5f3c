"""Silver citation annotation.

Each summary sentence is cited to the passage(s) with the highest entailment
score for that sentence. The default configuration (top_k=1, min_score=0.0)
is a pure argmax: every sentence gets exactly one citation. A score floor
can be raised to leave weakly supported sentences uncited, trading coverage
for precision.
"""

from __future__ import annotations

from dataclasses import dataclass

from plancite.corpus import AnnotatedSummary, Passage, Sentence
from plancite.scoring import Scorer


@dataclass
class AnnotateConfig:
    min_score: float = 0.0
    top_k: int = 1

    def validate(self) -> None:
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError("min_score must be in [0,1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")


class AnnotationError(RuntimeError):
    def __init__(self, sentence_index: int, cause: Exception):
        super().__init__(f"entailment scorer failed on sentence {sentence_index}: {cause}")
        self.sentence_index = sentence_index


def annotate_silver_citations(
    summary: AnnotatedSummary,
    passages: list[Passage],
    scorer: Scorer,
    config: AnnotateConfig | None = None,
) -> AnnotatedSummary:
    """Cite each sentence to its best-entailing passage(s).

    Scores every (passage, sentence) pair with the scorer, keeps the top_k
    passages scoring at least min_score, and breaks score ties by the lower
    passage id. Deterministic for any deterministic scorer, regardless of
    evaluation order.
    """
    config = config or AnnotateConfig()
    config.validate()
    if not passages:
        raise ValueError("need at least one passage")
    if not summary.sentences:
        raise ValueError("summary has no sentences")

    annotated = []
    for s in summary.sentences:
        try:
            judgments = scorer.entail_batch([(p.text, s.text) for p in passages])
        except Exception as exc:
            raise AnnotationError(s.index, exc) from exc
        ranked = sorted(
            zip(passages, judgments), key=lambda t: (-t[1].score, t[0].id)
        )
        citations = [
            p.id for p, j in ranked[: config.top_k] if j.score >= config.min_score
        ]
        annotated.append(Sentence(index=s.index, text=s.text, citations=citations))
    return AnnotatedSummary(sentences=annotated)
