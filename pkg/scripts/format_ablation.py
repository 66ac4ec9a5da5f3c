#!/usr/bin/env python3
"""Run the pipeline over every viable blueprint/format combination on the
bundled fixture corpus and print one results row per configuration.

A desk-scale rehearsal of the citation-format ablation: with the lexical
scorer the absolute numbers only sanity-check the machinery, but the same
table layout applies to real model output via `plancite eval`/`report`.
"""

import pathlib
import sys
import tempfile

from plancite.pipeline import PipelineConfig, run_pipeline

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "data" / "fixture_corpus.jsonl"

COMBOS = [
    ("none", "inline"),
    ("abstractive", "inline"),
    ("abstractive", "question_citations"),
    ("abstractive", "blueprint_citations"),
    ("extractive", "inline"),
    ("extractive", "implicit"),
]

COLUMNS = [
    ("ROUGE-L", lambda r: r.rouge_l.f1 if r.rouge_l else None),
    ("Faithful", lambda r: r.faithfulness),
    ("Answer", lambda r: r.blueprint_answerability),
    ("AutoAIS", lambda r: r.autoais),
    ("Ground/S", lambda r: r.grounding.get("summary_level") if r.grounding else None),
    ("Ground/s", lambda r: r.grounding.get("sentence_level") if r.grounding else None),
]


def main() -> int:
    work = pathlib.Path(tempfile.mkdtemp(prefix="format_ablation_"))
    header = f"{'blueprint':<12} {'format':<20}" + "".join(f"{name:>10}" for name, _ in COLUMNS)
    print(header)
    print("-" * len(header))
    for blueprint, format in COMBOS:
        config = PipelineConfig(blueprint=blueprint, format=format)
        out_dir = work / f"{blueprint}_{format}"
        _, summary = run_pipeline(config, str(CORPUS), str(out_dir))
        cells = []
        for _, getter in COLUMNS:
            value = getter(summary)
            cells.append(f"{'-':>10}" if value is None else f"{100 * value:>10.2f}")
        print(f"{blueprint:<12} {format:<20}" + "".join(cells))
    print(f"\nstage files under {work}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
