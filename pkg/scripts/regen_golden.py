#!/usr/bin/env python3
"""Regenerate the golden pipeline outputs under tests/data/golden/.

Run after any intentional change to the pipeline or the lexical scorer, then
review the diff before committing. The determinism acceptance test compares
fresh runs byte-for-byte against these files.
"""

import pathlib
import shutil
import sys

from plancite.pipeline import PipelineConfig, run_pipeline

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "tests" / "data" / "fixture_corpus.jsonl"
GOLDEN = ROOT / "tests" / "data" / "golden"

GOLDEN_CONFIG = PipelineConfig(scorer="lexical", blueprint="abstractive", format="inline")


def main() -> int:
    if GOLDEN.exists():
        shutil.rmtree(GOLDEN)
    records, summary = run_pipeline(GOLDEN_CONFIG, str(CORPUS), str(GOLDEN))
    print(f"wrote {len(records)} records to {GOLDEN}")
    print(f"aggregate: autoais={summary.autoais:.4f} faithfulness={summary.faithfulness:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
