"""Command-line interface.

Subcommands mirror the pipeline stages (ingest, rerank, annotate, blueprint,
render) plus convert, eval, report, serve-check, and run (everything end to
end). Exit codes: 0 success, 1 stage or record failure, 2 bad usage/config.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import os
import sys

from plancite import blueprint as bp_mod
from plancite import formats, metrics, pipeline
from plancite.corpus import (
    DEFAULT_ABBREVIATIONS,
    RecordError,
    load_records,
    save_records,
)
from plancite.metrics import MetricsReport
from plancite.pipeline import SCORER_URL_ENV, PipelineConfig, PipelineStageError
from plancite.scoring import RemoteScorer, ScorerError

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _add_scorer_args(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("scorer")
    group.add_argument("--scorer", choices=["lexical", "remote"], default="lexical")
    group.add_argument(
        "--scorer-url",
        default=None,
        help=f"remote scorer base URL (defaults to ${SCORER_URL_ENV})",
    )
    group.add_argument("--threshold", type=float, default=0.5, help="entailment threshold")


def _add_io_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--input", required=True, help="input record file (JSON lines)")
    parser.add_argument("--output", required=True, help="output record file")


def _config_from_args(args: argparse.Namespace) -> PipelineConfig:
    config = PipelineConfig(
        scorer=args.scorer,
        scorer_url=args.scorer_url or os.environ.get(SCORER_URL_ENV),
        entail_threshold=args.threshold,
    )
    for name in (
        "min_score", "top_k", "per_sentence", "summary_level", "per_passage",
        "mmr_lambda", "posthoc_filter", "blueprint", "format", "workers",
        "citation_base", "rerank", "autoais_premise", "autoais_denominator",
    ):
        if hasattr(args, name) and getattr(args, name) is not None:
            config = dataclasses.replace(config, **{name: getattr(args, name)})
    return config


def _load_abbreviations(path: str | None) -> tuple[str, ...]:
    if path is None:
        return DEFAULT_ABBREVIATIONS
    with open(path, encoding="utf-8") as fh:
        return tuple(line.strip().lower() for line in fh if line.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plancite",
        description="Question-blueprint planning, silver citations, and attribution metrics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and normalize a record file")
    _add_io_args(p)
    p.add_argument("--citation-base", type=int, choices=[0, 1], default=0,
                   help="citation indexing of the input summaries")
    p.add_argument("--abbreviations", default=None,
                   help="file with one sentence-segmenter guard token per line")

    p = sub.add_parser("rerank", help="reorder passages by query relevance")
    _add_io_args(p)
    _add_scorer_args(p)

    p = sub.add_parser("annotate", help="add silver citations to summaries")
    _add_io_args(p)
    _add_scorer_args(p)
    p.add_argument("--min-score", dest="min_score", type=float, default=0.0)
    p.add_argument("--top-k", dest="top_k", type=int, default=1)

    p = sub.add_parser("blueprint", help="construct question blueprints")
    p.add_argument("kind", choices=["abstractive", "extractive"])
    _add_io_args(p)
    _add_scorer_args(p)
    p.add_argument("--per-sentence", dest="per_sentence", type=int, default=10)
    p.add_argument("--summary-level", dest="summary_level", type=int, default=10)
    p.add_argument("--per-passage", dest="per_passage", type=int, default=5)
    p.add_argument("--lambda", dest="mmr_lambda", type=float, default=1.0)
    p.add_argument("--posthoc-filter", dest="posthoc_filter", action="store_true")

    p = sub.add_parser("render", help="serialize blueprint and summary targets")
    _add_io_args(p)
    p.add_argument("--format", choices=list(formats.FORMATS), default="inline")

    p = sub.add_parser("convert", help="re-render targets in another citation format")
    _add_io_args(p)
    p.add_argument("--from", dest="from_format", choices=list(formats.FORMATS), required=True)
    p.add_argument("--to", dest="to_format", choices=list(formats.FORMATS), required=True)

    p = sub.add_parser("eval", help="score summaries and blueprints")
    _add_io_args(p)
    _add_scorer_args(p)
    p.add_argument("--predictions", default=None,
                   help="JSONL of {id, text} model outputs; default scores the records themselves")
    p.add_argument("--format", choices=list(formats.FORMATS), default="inline",
                   help="citation format of the predictions")
    p.add_argument("--kind", choices=list(formats.KINDS), default="no_blueprint",
                   help="blueprint kind of the predictions")
    p.add_argument("--aggregate", default=None, help="path for the corpus-level report")
    p.add_argument("--autoais-premise", dest="autoais_premise",
                   choices=list(metrics.AUTOAIS_PREMISE_MODES), default="union")
    p.add_argument("--autoais-denominator", dest="autoais_denominator",
                   choices=list(metrics.AUTOAIS_DENOMINATORS), default="all")

    p = sub.add_parser("report", help="emit the abstractiveness curve and a results table")
    p.add_argument("--metrics", nargs="+", required=True,
                   help="metrics summary JSON file(s), one table row each")
    p.add_argument("--labels", nargs="*", default=None, help="row label per metrics file")
    p.add_argument("--curve-csv", default=None, help="write the abstractiveness curve CSV here")
    p.add_argument("--table", default=None, help="write the results table here (default stdout)")

    p = sub.add_parser("serve-check", help="ping a remote scorer's /meta endpoint")
    p.add_argument("--scorer-url", default=None)

    p = sub.add_parser("run", help="run the full pipeline")
    p.add_argument("--input", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--resume", action="store_true")
    # null defaults so flags only override what the config file set
    p.add_argument("--scorer", choices=["lexical", "remote"], default=None)
    p.add_argument("--scorer-url", default=None)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--blueprint", choices=["abstractive", "extractive", "none"], default=None)
    p.add_argument("--format", choices=list(formats.FORMATS), default=None)
    p.add_argument("--rerank", action="store_true", default=None)
    p.add_argument("--posthoc-filter", dest="posthoc_filter", action="store_true", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--min-score", dest="min_score", type=float, default=None)
    p.add_argument("--top-k", dest="top_k", type=int, default=None)
    p.add_argument("--per-sentence", dest="per_sentence", type=int, default=None)
    p.add_argument("--summary-level", dest="summary_level", type=int, default=None)
    p.add_argument("--per-passage", dest="per_passage", type=int, default=None)
    p.add_argument("--citation-base", dest="citation_base", type=int, choices=[0, 1], default=None)

    return parser


def _cmd_ingest(args) -> int:
    records = load_records(
        args.input,
        citation_base=args.citation_base,
        abbreviations=_load_abbreviations(args.abbreviations),
    )
    save_records(records, args.output)
    print(f"ingested {len(records)} records -> {args.output}")
    return EXIT_OK


def _stage_command(args, stage_factory) -> int:
    config = _config_from_args(args)
    config.validate()
    scorer = config.make_scorer()
    records = load_records(args.input)
    records = pipeline._map_records(args.command, records, stage_factory(config, scorer), 1)
    save_records(records, args.output)
    print(f"{args.command}: {len(records)} records -> {args.output}")
    return EXIT_OK


def _cmd_render(args) -> int:
    config = dataclasses.replace(PipelineConfig(), format=args.format, blueprint="none")
    records = load_records(args.input)
    records = pipeline._map_records("render", records, pipeline._renderer(config), 1)
    save_records(records, args.output)
    print(f"render: {len(records)} records -> {args.output}")
    return EXIT_OK


def _cmd_convert(args) -> int:
    records = load_records(args.input)
    out = []
    for record in records:
        target = record.extras.get("target")
        if target is None:
            raise PipelineStageError("convert", record.record_id, ValueError("record has no target"))
        provenance = None
        if "passage_questions" in record.extras:
            provenance = bp_mod.provenance_index(
                bp_mod.passage_questions_from_dict(record.extras["passage_questions"])
            )
        parsed = formats.parse(
            target["text"], args.from_format, target["kind"],
            n_passages=len(record.passages), provenance=provenance,
        )
        rendered = formats.render(
            parsed.blueprint, parsed.summary, args.to_format, n_passages=len(record.passages)
        )
        extras = dict(record.extras, target={
            "text": rendered.text, "format": rendered.format, "kind": rendered.kind,
        })
        out.append(dataclasses.replace(record, extras=extras))
    save_records(out, args.output)
    print(f"convert: {len(out)} targets {args.from_format} -> {args.to_format}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    # args.format/kind describe the predictions, not a render stage, so they
    # stay out of the pipeline config.
    config = PipelineConfig(
        scorer=args.scorer,
        scorer_url=args.scorer_url or os.environ.get(SCORER_URL_ENV),
        entail_threshold=args.threshold,
        autoais_premise=args.autoais_premise,
        autoais_denominator=args.autoais_denominator,
    )
    config.validate()
    scorer = config.make_scorer()
    metrics_config = config.metrics_config()
    records = load_records(args.input)

    predictions = None
    if args.predictions:
        predictions = {}
        with open(args.predictions, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    obj = json.loads(line)
                    predictions[str(obj["id"])] = obj["text"]

    rows = []
    reports = []
    for record in records:
        bp = None
        if predictions is not None:
            if record.record_id not in predictions:
                raise PipelineStageError(
                    "eval", record.record_id, ValueError("no prediction for record")
                )
            provenance = None
            if "passage_questions" in record.extras:
                provenance = bp_mod.provenance_index(
                    bp_mod.passage_questions_from_dict(record.extras["passage_questions"])
                )
            parsed = formats.parse(
                predictions[record.record_id], args.format, args.kind,
                n_passages=len(record.passages), provenance=provenance, strict=False,
            )
            candidate, bp = parsed.summary, parsed.blueprint
            if args.format == formats.FORMAT_IMPLICIT and bp is not None and provenance:
                candidate = formats.resolve_implicit_citations(bp, candidate)
        else:
            if record.reference_summary is None:
                raise PipelineStageError(
                    "eval", record.record_id, ValueError("record has no summary")
                )
            candidate = record.reference_summary
            if "blueprint" in record.extras:
                bp = bp_mod.blueprint_from_dict(record.extras["blueprint"])
        if not candidate.sentences:
            raise PipelineStageError(
                "eval", record.record_id, ValueError("empty candidate summary")
            )
        report = pipeline.evaluate_record(
            candidate, record, scorer, metrics_config, bp=bp,
            reference=record.reference_summary,
        )
        reports.append(report)
        rows.append({"id": record.record_id, **report.to_dict()})

    with open(args.output, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True) + "\n")
    if args.aggregate:
        with open(args.aggregate, "w", encoding="utf-8") as fh:
            json.dump(metrics.aggregate(reports).to_dict(), fh,
                      ensure_ascii=False, sort_keys=True, indent=2)
            fh.write("\n")
    print(f"eval: {len(rows)} records -> {args.output}")
    return EXIT_OK


_TABLE_COLUMNS = (
    ("ROUGE-L", lambda r: r.rouge_l.f1 if r.rouge_l else None),
    ("Faithfulness", lambda r: r.faithfulness),
    ("Answerability", lambda r: r.blueprint_answerability),
    ("AutoAIS", lambda r: r.autoais),
    ("Grounding/Summary", lambda r: r.grounding.get("summary_level") if r.grounding else None),
    ("Grounding/Sentences", lambda r: r.grounding.get("sentence_level") if r.grounding else None),
)


def _cmd_report(args) -> int:
    labels = args.labels or [os.path.basename(p) for p in args.metrics]
    if len(labels) != len(args.metrics):
        print("error: need one label per metrics file", file=sys.stderr)
        return EXIT_USAGE
    loaded = []
    for path in args.metrics:
        with open(path, encoding="utf-8") as fh:
            loaded.append(MetricsReport.from_dict(json.load(fh)))

    if args.curve_csv:
        with open(args.curve_csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["label", "n", "unique_fraction"])
            for label, report in zip(labels, loaded):
                for n in sorted(report.abstractiveness):
                    writer.writerow([label, n, f"{report.abstractiveness[n]:.6f}"])
        print(f"abstractiveness curve -> {args.curve_csv}")

    header = ["Model"] + [name for name, _ in _TABLE_COLUMNS]
    lines = ["\t".join(header)]
    for label, report in zip(labels, loaded):
        cells = [label]
        for _, getter in _TABLE_COLUMNS:
            value = getter(report)
            cells.append("-" if value is None else f"{100 * value:.2f}")
        lines.append("\t".join(cells))
    table = "\n".join(lines) + "\n"
    if args.table:
        with open(args.table, "w", encoding="utf-8") as fh:
            fh.write(table)
        print(f"table -> {args.table}")
    else:
        sys.stdout.write(table)
    return EXIT_OK


def _cmd_serve_check(args) -> int:
    url = args.scorer_url or os.environ.get(SCORER_URL_ENV)
    if not url:
        print(f"error: no scorer URL (use --scorer-url or ${SCORER_URL_ENV})", file=sys.stderr)
        return EXIT_USAGE
    client = RemoteScorer(url)
    meta = client.meta()
    print(f"scorer at {url}: version={meta.get('version')} "
          f"capabilities={','.join(meta.get('capabilities', []))}")
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.config:
        config = PipelineConfig.from_file(args.config)
    else:
        config = PipelineConfig()
    url = args.scorer_url or os.environ.get(SCORER_URL_ENV)
    if url:
        config = dataclasses.replace(config, scorer_url=url)
    if args.threshold is not None:
        config = dataclasses.replace(config, entail_threshold=args.threshold)
    for name in (
        "scorer", "blueprint", "format", "rerank", "posthoc_filter", "workers",
        "min_score", "top_k", "per_sentence", "summary_level", "per_passage",
        "citation_base",
    ):
        value = getattr(args, name)
        if value is not None:
            config = dataclasses.replace(config, **{name: value})
    records, summary = pipeline.run_pipeline(config, args.input, args.out_dir, resume=args.resume)
    print(f"pipeline: {len(records)} records -> {args.out_dir}")
    for name, getter in _TABLE_COLUMNS:
        value = getter(summary)
        if value is not None:
            print(f"  {name}: {100 * value:.2f}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "rerank":
            return _stage_command(args, lambda c, s: pipeline._reranker(s))
        if args.command == "annotate":
            return _stage_command(args, pipeline._annotator)
        if args.command == "blueprint":
            args.blueprint = args.kind
            return _stage_command(args, pipeline._blueprinter)
        if args.command == "render":
            return _cmd_render(args)
        if args.command == "convert":
            return _cmd_convert(args)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "report":
            return _cmd_report(args)
        if args.command == "serve-check":
            return _cmd_serve_check(args)
        if args.command == "run":
            return _cmd_run(args)
        parser.error(f"unknown command {args.command!r}")
    except (ValueError, RecordError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (PipelineStageError, ScorerError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
