"""Attribution and quality metrics.

All entailment-based metrics are binary per sentence or per question (a pair
either passes the scorer's threshold or not) and report proportions. Scores
are deterministic given a deterministic scorer, and are computed on
structured citations, never on citation-token strings.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

from plancite.blueprint import Blueprint
from plancite.corpus import AnnotatedSummary, Passage
from plancite.scoring import Scorer, tokenize

ABSTRACTIVENESS_NS = (3, 5, 10, 20, 40, 80)

AUTOAIS_PREMISE_MODES = ("union", "per_passage_and")
AUTOAIS_DENOMINATORS = ("all", "cited_only")


@dataclass
class MetricsConfig:
    autoais_premise: str = "union"
    autoais_denominator: str = "all"
    abstractiveness_ns: tuple[int, ...] = ABSTRACTIVENESS_NS

    def validate(self) -> None:
        if self.autoais_premise not in AUTOAIS_PREMISE_MODES:
            raise ValueError(f"autoais_premise must be one of {AUTOAIS_PREMISE_MODES}")
        if self.autoais_denominator not in AUTOAIS_DENOMINATORS:
            raise ValueError(f"autoais_denominator must be one of {AUTOAIS_DENOMINATORS}")
        if any(n < 1 for n in self.abstractiveness_ns):
            raise ValueError("n-gram sizes must be >= 1")


@dataclass
class RougeScore:
    precision: float
    recall: float
    f1: float


@dataclass
class MetricsReport:
    rouge_l: RougeScore | None = None
    faithfulness: float | None = None
    autoais: float | None = None
    blueprint_answerability: float | None = None
    abstractiveness: dict[int, float] = field(default_factory=dict)
    grounding: dict[str, float] | None = None
    counts: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        obj: dict[str, Any] = {}
        if self.rouge_l is not None:
            obj["rouge_l"] = {
                "precision": self.rouge_l.precision,
                "recall": self.rouge_l.recall,
                "f1": self.rouge_l.f1,
            }
        if self.faithfulness is not None:
            obj["faithfulness"] = self.faithfulness
        if self.autoais is not None:
            obj["autoais"] = self.autoais
        if self.blueprint_answerability is not None:
            obj["blueprint_answerability"] = self.blueprint_answerability
        if self.abstractiveness:
            obj["abstractiveness"] = {str(n): f for n, f in self.abstractiveness.items()}
        if self.grounding is not None:
            obj["grounding"] = dict(self.grounding)
        obj["counts"] = dict(self.counts)
        return obj

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "MetricsReport":
        rouge = None
        if "rouge_l" in obj:
            r = obj["rouge_l"]
            rouge = RougeScore(r["precision"], r["recall"], r["f1"])
        return cls(
            rouge_l=rouge,
            faithfulness=obj.get("faithfulness"),
            autoais=obj.get("autoais"),
            blueprint_answerability=obj.get("blueprint_answerability"),
            abstractiveness={int(n): f for n, f in obj.get("abstractiveness", {}).items()},
            grounding=obj.get("grounding"),
            counts=dict(obj.get("counts", {})),
        )


def rouge_tokens(text: str) -> list[str]:
    # Shares the scoring normalization but keeps stopwords.
    return tokenize(text)


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """Longest-common-subsequence F between candidate and reference tokens.

    Citation tokens must already be stripped by the caller.
    """
    cand, ref = rouge_tokens(candidate), rouge_tokens(reference)
    if not cand or not ref:
        return RougeScore(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    f1 = 2 * precision * recall / (precision + recall) if lcs else 0.0
    return RougeScore(precision, recall, f1)


def _lcs_length(a: list[str], b: list[str]) -> int:
    prev = [0] * (len(b) + 1)
    for x in a:
        row = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                row.append(prev[j - 1] + 1)
            else:
                row.append(max(prev[j], row[j - 1]))
        prev = row
    return prev[-1]


def faithfulness(summary: AnnotatedSummary, passages: list[Passage], scorer: Scorer) -> float:
    """Fraction of summary sentences entailed by all passages combined."""
    if not summary.sentences:
        raise ValueError("summary has no sentences")
    premise = " ".join(p.text for p in passages)
    judgments = scorer.entail_batch([(premise, s.text) for s in summary.sentences])
    return sum(1 for j in judgments if j.entailed) / len(summary.sentences)


def autoais(
    summary: AnnotatedSummary,
    passages: list[Passage],
    scorer: Scorer,
    config: MetricsConfig | None = None,
) -> float:
    """Per-sentence citation support.

    A cited sentence counts as supported when entailed by its cited passages:
    by their concatenation in citation order ("union", the default) or by
    every cited passage individually ("per_passage_and"). Uncited sentences
    count against the score under the default "all" denominator and are
    excluded under "cited_only".
    """
    config = config or MetricsConfig()
    config.validate()
    cited = [s for s in summary.sentences if s.citations]
    supported = 0
    for s in cited:
        if config.autoais_premise == "union":
            premise = " ".join(passages[c].text for c in s.citations)
            ok = scorer.entail(premise, s.text).entailed
        else:
            ok = all(
                scorer.entail(passages[c].text, s.text).entailed for c in s.citations
            )
        supported += int(ok)
    if config.autoais_denominator == "all":
        denominator = len(summary.sentences)
    else:
        denominator = len(cited)
    return supported / denominator if denominator else 0.0


def blueprint_answerability(
    bp: Blueprint,
    summary: AnnotatedSummary,
    passages: list[Passage],
    clf: Scorer,
) -> float:
    """Fraction of blueprint questions answerable from their cited passages.

    A question cites passages implicitly through its sentence; entries whose
    sentence cites nothing count as unanswered.
    """
    if not bp.entries:
        return 0.0
    n_sentences = len(summary.sentences)
    answered = 0
    for entry in bp.entries:
        if not 0 <= entry.sentence_index < n_sentences:
            raise ValueError(f"blueprint entry for nonexistent sentence {entry.sentence_index}")
        citations = summary.sentences[entry.sentence_index].citations
        if not citations:
            continue
        context = " ".join(passages[c].text for c in citations)
        if all(clf.answerable(q.text, context).entailed for q in entry.questions):
            answered += 1
    return answered / len(bp.entries)


def abstractiveness(
    summary_text: str,
    passages: list[Passage],
    ns: tuple[int, ...] = ABSTRACTIVENESS_NS,
) -> dict[int, float]:
    """Fraction of summary n-grams absent from every passage, per n.

    The summary text must already have citations stripped. When the summary
    is shorter than n tokens the fraction is 1.0 if the whole summary does
    not occur contiguously in any passage, else 0.0.
    """
    tokens = rouge_tokens(summary_text)
    passage_tokens = [rouge_tokens(p.text) for p in passages]
    out: dict[int, float] = {}
    for n in ns:
        if n < 1:
            raise ValueError("n must be >= 1")
        if len(tokens) < n:
            whole = tuple(tokens)
            seen = not tokens or any(
                whole in _ngrams(pt, len(tokens)) for pt in passage_tokens
            )
            out[n] = 0.0 if seen else 1.0
            continue
        grams = [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]
        passage_grams = set()
        for pt in passage_tokens:
            passage_grams |= _ngrams(pt, n)
        novel = sum(1 for g in grams if g not in passage_grams)
        out[n] = novel / len(grams)
    return out


def _ngrams(tokens: list[str], n: int) -> set[tuple[str, ...]]:
    if n == 0:
        return {()}
    return {tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)}


def grounding(bp: Blueprint, summary: AnnotatedSummary, clf: Scorer) -> dict[str, float]:
    """How answerable the blueprint is from its own summary.

    summary_level scores questions against the whole summary text;
    sentence_level against each question's own sentence.
    """
    if not bp.entries:
        return {"summary_level": 0.0, "sentence_level": 0.0}
    full_text = summary.text()
    n_sentences = len(summary.sentences)
    summary_hits = 0
    sentence_hits = 0
    for entry in bp.entries:
        if not 0 <= entry.sentence_index < n_sentences:
            raise ValueError(f"blueprint entry for nonexistent sentence {entry.sentence_index}")
        sentence_text = summary.sentences[entry.sentence_index].text
        if all(clf.answerable(q.text, full_text).entailed for q in entry.questions):
            summary_hits += 1
        if all(clf.answerable(q.text, sentence_text).entailed for q in entry.questions):
            sentence_hits += 1
    return {
        "summary_level": summary_hits / len(bp.entries),
        "sentence_level": sentence_hits / len(bp.entries),
    }


def aggregate(reports: list[MetricsReport]) -> MetricsReport:
    """Macro-average the per-record reports; counts are summed.

    Optional metrics are averaged over the records that carry them.
    """
    if not reports:
        raise ValueError("cannot aggregate an empty report list")

    def mean_of(values: list[float]) -> float | None:
        return sum(values) / len(values) if values else None

    rouges = [r.rouge_l for r in reports if r.rouge_l is not None]
    rouge = None
    if rouges:
        rouge = RougeScore(
            precision=sum(r.precision for r in rouges) / len(rouges),
            recall=sum(r.recall for r in rouges) / len(rouges),
            f1=sum(r.f1 for r in rouges) / len(rouges),
        )

    ns = sorted({n for r in reports for n in r.abstractiveness})
    abstr = {}
    for n in ns:
        values = [r.abstractiveness[n] for r in reports if n in r.abstractiveness]
        abstr[n] = sum(values) / len(values)

    groundings = [r.grounding for r in reports if r.grounding is not None]
    ground = None
    if groundings:
        ground = {
            "summary_level": sum(g["summary_level"] for g in groundings) / len(groundings),
            "sentence_level": sum(g["sentence_level"] for g in groundings) / len(groundings),
        }

    counts: dict[str, int] = {}
    for r in reports:
        for key, value in r.counts.items():
            counts[key] = counts.get(key, 0) + value

    return MetricsReport(
        rouge_l=rouge,
        faithfulness=mean_of([r.faithfulness for r in reports if r.faithfulness is not None]),
        autoais=mean_of([r.autoais for r in reports if r.autoais is not None]),
        blueprint_answerability=mean_of(
            [r.blueprint_answerability for r in reports if r.blueprint_answerability is not None]
        ),
        abstractiveness=abstr,
        grounding=ground,
        counts=counts,
    )
