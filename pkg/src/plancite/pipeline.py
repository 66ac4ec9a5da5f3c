"""End-to-end orchestration: ingest -> [rerank] -> annotate -> blueprint ->
render -> eval.

Every stage persists its output as a record file in the output directory, so
a run can be audited or resumed from any stage. Records are processed by a
bounded worker pool; results are merged in input order, so the same config
and input produce byte-identical files for any worker count.
"""

from __future__ import annotations

import dataclasses
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

from plancite import blueprint as bp_mod
from plancite import formats, metrics
from plancite.annotate import AnnotateConfig, annotate_silver_citations
from plancite.blueprint import BlueprintConfig
from plancite.corpus import (
    AnnotatedSummary,
    Record,
    Sentence,
    load_records,
    remap_citations,
    rerank_passages,
    save_records,
)
from plancite.metrics import MetricsConfig, MetricsReport
from plancite.scoring import DEFAULT_THRESHOLD, LexicalScorer, RemoteScorer, Scorer

STAGES = ("ingest", "rerank", "annotate", "blueprint", "render", "eval")

SCORER_URL_ENV = "PLANCITE_SCORER_URL"


@dataclass
class PipelineConfig:
    scorer: str = "lexical"  # "lexical" | "remote"
    scorer_url: str | None = None
    entail_threshold: float = DEFAULT_THRESHOLD
    batch_size: int = 32
    rerank: bool = False
    min_score: float = 0.0
    top_k: int = 1
    blueprint: str = "abstractive"  # "abstractive" | "extractive" | "none"
    per_sentence: int = bp_mod.DEFAULT_PER_SENTENCE
    summary_level: int = bp_mod.DEFAULT_SUMMARY_LEVEL
    per_passage: int = bp_mod.DEFAULT_PER_PASSAGE
    mmr_lambda: float = bp_mod.DEFAULT_MMR_LAMBDA
    posthoc_filter: bool = False
    format: str = formats.FORMAT_INLINE
    autoais_premise: str = "union"
    autoais_denominator: str = "all"
    abstractiveness_ns: tuple[int, ...] = metrics.ABSTRACTIVENESS_NS
    citation_base: int = 0
    workers: int = 1
    seed: int = 0  # reserved for sampling backends; the lexical one never samples

    def validate(self) -> None:
        if self.scorer not in ("lexical", "remote"):
            raise ValueError(f"unknown scorer backend: {self.scorer!r}")
        if self.scorer == "remote" and not self.scorer_url:
            raise ValueError(f"remote scorer needs a URL (flag or {SCORER_URL_ENV})")
        if not 0.0 <= self.entail_threshold <= 1.0:
            raise ValueError("entail_threshold must be in [0,1]")
        if not 0.0 <= self.min_score <= 1.0:
            raise ValueError("min_score must be in [0,1]")
        if self.top_k < 1:
            raise ValueError("top_k must be >= 1")
        if self.blueprint not in ("abstractive", "extractive", "none"):
            raise ValueError(f"unknown blueprint kind: {self.blueprint!r}")
        if self.format not in formats.FORMATS:
            raise ValueError(f"unknown citation format: {self.format!r}")
        if self.format == formats.FORMAT_IMPLICIT and self.blueprint != "extractive":
            raise ValueError("the implicit format requires an extractive blueprint")
        if self.format in (formats.FORMAT_QUESTION_CITATIONS, formats.FORMAT_BLUEPRINT_CITATIONS):
            if self.blueprint == "none":
                raise ValueError(f"format {self.format!r} requires a blueprint")
        if min(self.per_sentence, self.summary_level, self.per_passage) < 0:
            raise ValueError("question budgets must be >= 0")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        if self.citation_base not in (0, 1):
            raise ValueError("citation_base must be 0 or 1")
        MetricsConfig(
            autoais_premise=self.autoais_premise,
            autoais_denominator=self.autoais_denominator,
            abstractiveness_ns=tuple(self.abstractiveness_ns),
        ).validate()

    def make_scorer(self) -> Scorer:
        if self.scorer == "lexical":
            return LexicalScorer(threshold=self.entail_threshold)
        return RemoteScorer(
            self.scorer_url,
            threshold=self.entail_threshold,
            batch_size=self.batch_size,
        )

    def blueprint_config(self) -> BlueprintConfig:
        return BlueprintConfig(
            per_sentence=self.per_sentence,
            summary_level=self.summary_level,
            per_passage=self.per_passage,
            mmr_lambda=self.mmr_lambda,
        )

    def metrics_config(self) -> MetricsConfig:
        return MetricsConfig(
            autoais_premise=self.autoais_premise,
            autoais_denominator=self.autoais_denominator,
            abstractiveness_ns=tuple(self.abstractiveness_ns),
        )

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
        return cls.from_dict(obj)

    @classmethod
    def from_dict(cls, obj: dict) -> "PipelineConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        if "abstractiveness_ns" in obj:
            obj = dict(obj, abstractiveness_ns=tuple(obj["abstractiveness_ns"]))
        return cls(**obj)


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, record_id: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed on record {record_id!r}: {cause}")
        self.stage = stage
        self.record_id = record_id
        self.cause = cause


def _map_records(
    stage: str, records: list[Record], fn: Callable[[Record], Record], workers: int
) -> list[Record]:
    def guarded(record: Record) -> Record:
        try:
            return fn(record)
        except PipelineStageError:
            raise
        except Exception as exc:
            raise PipelineStageError(stage, record.record_id, exc) from exc

    if workers == 1:
        return [guarded(r) for r in records]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(guarded, records))


def _require_summary(stage: str, record: Record) -> AnnotatedSummary:
    if record.reference_summary is None:
        raise PipelineStageError(stage, record.record_id, ValueError("record has no summary"))
    return record.reference_summary


def _stage_path(out_dir: str, index: int, name: str) -> str:
    return os.path.join(out_dir, f"{index:02d}_{name}.jsonl")


def run_pipeline(
    config: PipelineConfig, input_path: str, out_dir: str, resume: bool = False
) -> tuple[list[Record], MetricsReport]:
    """Run all stages, persisting each one's output under ``out_dir``.

    With ``resume=True``, stages whose output file already exists are loaded
    instead of recomputed.
    """
    config.validate()
    os.makedirs(out_dir, exist_ok=True)
    scorer = config.make_scorer()

    def run_stage(index: int, name: str, compute: Callable[[], list[Record]]) -> list[Record]:
        path = _stage_path(out_dir, index, name)
        if resume and os.path.exists(path):
            return load_records(path)
        records = compute()
        save_records(records, path)
        return records

    records = run_stage(
        0, "ingest", lambda: load_records(input_path, citation_base=config.citation_base)
    )
    if not records:
        raise ValueError(f"no records in {input_path}")

    if config.rerank:
        records = run_stage(
            1, "rerank", lambda: _map_records("rerank", records, _reranker(scorer), config.workers)
        )

    records = run_stage(
        2, "annotate",
        lambda: _map_records("annotate", records, _annotator(config, scorer), config.workers),
    )
    if config.blueprint != "none":
        records = run_stage(
            3, "blueprint",
            lambda: _map_records("blueprint", records, _blueprinter(config, scorer), config.workers),
        )
    records = run_stage(
        4, "render",
        lambda: _map_records("render", records, _renderer(config), config.workers),
    )
    records = run_stage(
        5, "eval",
        lambda: _map_records("eval", records, _evaluator(config, scorer), config.workers),
    )

    reports = [MetricsReport.from_dict(r.extras["metrics"]) for r in records]
    summary_report = metrics.aggregate(reports)
    summary_path = os.path.join(out_dir, "metrics_summary.json")
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary_report.to_dict(), fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")
    return records, summary_report


def _reranker(scorer: Scorer) -> Callable[[Record], Record]:
    def stage(record: Record) -> Record:
        reranked, id_map = rerank_passages(
            record.query, record.passages, lambda q, p: scorer.relevance(q, p)
        )
        summary = record.reference_summary
        if summary is not None:
            summary = remap_citations(summary, id_map)
        return Record(
            record_id=record.record_id,
            query=record.query,
            passages=reranked,
            reference_summary=summary,
            extras=dict(record.extras, rerank_map={str(k): v for k, v in id_map.items()}),
        )

    return stage


def _annotator(config: PipelineConfig, scorer: Scorer) -> Callable[[Record], Record]:
    annotate_config = AnnotateConfig(min_score=config.min_score, top_k=config.top_k)

    def stage(record: Record) -> Record:
        summary = _require_summary("annotate", record)
        bare = AnnotatedSummary(
            sentences=[Sentence(index=s.index, text=s.text) for s in summary.sentences]
        )
        annotated = annotate_silver_citations(bare, record.passages, scorer, annotate_config)
        return dataclasses.replace(record, reference_summary=annotated)

    return stage


def _blueprinter(config: PipelineConfig, scorer: Scorer) -> Callable[[Record], Record]:
    bp_config = config.blueprint_config()

    def stage(record: Record) -> Record:
        summary = _require_summary("blueprint", record)
        extras = dict(record.extras)
        if config.blueprint == "abstractive":
            pool = bp_mod.build_question_pool(summary, scorer, bp_config)
            bp = bp_mod.select_abstractive_blueprint(summary, pool)
        else:
            passage_questions = bp_mod.build_passage_questions(record.passages, scorer, bp_config)
            bp = bp_mod.select_extractive_blueprint(summary, passage_questions, scorer, bp_config)
            extras["passage_questions"] = bp_mod.passage_questions_to_dict(passage_questions)
        if config.posthoc_filter:
            bp = bp_mod.filter_blueprint_posthoc(bp, record.passages, scorer)
        extras["blueprint"] = bp_mod.blueprint_to_dict(bp)
        return dataclasses.replace(record, extras=extras)

    return stage


def _renderer(config: PipelineConfig) -> Callable[[Record], Record]:
    def stage(record: Record) -> Record:
        summary = _require_summary("render", record)
        bp = None
        if "blueprint" in record.extras:
            bp = bp_mod.blueprint_from_dict(record.extras["blueprint"])
        target = formats.render(bp, summary, config.format, n_passages=len(record.passages))
        extras = dict(
            record.extras,
            target={"text": target.text, "format": target.format, "kind": target.kind},
        )
        return dataclasses.replace(record, extras=extras)

    return stage


def _evaluator(config: PipelineConfig, scorer: Scorer) -> Callable[[Record], Record]:
    metrics_config = config.metrics_config()

    def stage(record: Record) -> Record:
        summary = _require_summary("eval", record)
        bp = None
        if "blueprint" in record.extras:
            bp = bp_mod.blueprint_from_dict(record.extras["blueprint"])
        report = evaluate_record(
            summary, record, scorer, metrics_config, bp=bp, reference=summary
        )
        extras = dict(record.extras, metrics=report.to_dict())
        return dataclasses.replace(record, extras=extras)

    return stage


def evaluate_record(
    summary: AnnotatedSummary,
    record: Record,
    scorer: Scorer,
    config: MetricsConfig | None = None,
    bp: bp_mod.Blueprint | None = None,
    reference: AnnotatedSummary | None = None,
) -> MetricsReport:
    """Score one candidate summary (optionally with its blueprint) against a
    record's passages and reference."""
    config = config or MetricsConfig()
    candidate_text = summary.text()
    rouge = None
    if reference is not None:
        rouge = metrics.rouge_l(candidate_text, reference.text())
    report = MetricsReport(
        rouge_l=rouge,
        faithfulness=metrics.faithfulness(summary, record.passages, scorer),
        autoais=metrics.autoais(summary, record.passages, scorer, config),
        abstractiveness=metrics.abstractiveness(
            candidate_text, record.passages, config.abstractiveness_ns
        ),
        counts={
            "sentences": len(summary.sentences),
            "cited_sentences": sum(1 for s in summary.sentences if s.citations),
            "blueprint_entries": len(bp.entries) if bp is not None else 0,
        },
    )
    if bp is not None:
        report.blueprint_answerability = metrics.blueprint_answerability(
            bp, summary, record.passages, scorer
        )
        report.grounding = metrics.grounding(bp, summary, scorer)
    return report
