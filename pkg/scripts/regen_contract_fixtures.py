#!/usr/bin/env python3
"""Regenerate the frozen wire-protocol contract fixtures.

The fixtures record request/response pairs produced by the lexical oracle.
Both the package's protocol adapter and the scorer service's stub backend
must reproduce them exactly; regenerate only on an intentional protocol or
oracle change, and review the diff.
"""

import json
import pathlib
import random
import sys

from plancite.scoring import LexicalScorer, handle_protocol_request

ROOT = pathlib.Path(__file__).resolve().parent.parent
OUT = ROOT / "contracts" / "fixtures_v1.json"

NOUNS = "rivers glaciers valleys reefs turbines lanterns olives spores tides embers".split()
VERBS = "carry carve shelter spin burn regrow drift settle flow cool".split()
EXTRA = "slowly northward together rarely daily".split()


def sentence(rng):
    return f"{rng.choice(NOUNS)} {rng.choice(VERBS)} {rng.choice(NOUNS)} {rng.choice(EXTRA)}"


def make_shared_answerable(rng, scorer, count=50):
    shared = []
    for i in range(count):
        context = f"{sentence(rng)} and {sentence(rng)}"
        tokens = context.split()
        if i % 3 == 0:
            # fully covered question, sometimes with a plural twist
            picked = rng.sample([t for t in tokens if t not in ("and",)], 2)
            if i % 6 == 0 and not picked[0].endswith("s"):
                picked[0] += "s"
            question = f"what {picked[0]} {picked[1]}?"
        elif i % 3 == 1:
            question = f"which {rng.choice(tokens)} {rng.choice(['crumble', 'evaporate'])}?"
        else:
            question = "why do comets brighten near perihelion?"
        judgment = scorer.answerable(question, context)
        shared.append(
            {
                "question": question,
                "context": context,
                "label": "Yes" if judgment.entailed else "No",
                "score": judgment.score,
            }
        )
    return shared


def main() -> int:
    rng = random.Random(20240817)
    scorer = LexicalScorer()
    cases = []

    def record(endpoint, request):
        cases.append(
            {
                "endpoint": endpoint,
                "request": request,
                "response": handle_protocol_request(endpoint, request, scorer),
            }
        )

    # entailment batches of several sizes, scores spread over [0, 1]
    for batch_size in (1, 3, 5):
        pairs = []
        for i in range(batch_size):
            premise = sentence(rng)
            if i % 3 == 0:
                hypothesis = premise
            elif i % 3 == 1:
                hypothesis = f"{premise.split()[0]} {rng.choice(VERBS)} {rng.choice(NOUNS)}"
            else:
                hypothesis = "meteor showers peak after midnight"
            pairs.append({"premise": premise, "hypothesis": hypothesis})
        record("/entail", {"pairs": pairs})

    shared = make_shared_answerable(rng, scorer)
    for start in range(0, 20, 5):
        chunk = shared[start : start + 5]
        record(
            "/answerable",
            {"pairs": [{"question": s["question"], "context": s["context"]} for s in chunk]},
        )

    record(
        "/generate",
        {"items": [{"passage": "rivers carry cold water from tall mountains to the sea",
                    "style": "general", "count": 4}]},
    )
    record(
        "/generate",
        {"items": [
            {"passage": "Rivers flood in spring. Dams hold the surge back.",
             "sentence": "Dams hold the surge back.", "style": "specific", "count": 3},
            {"passage": "glaciers carve deep valleys over long ages",
             "style": "general", "count": 2},
        ]},
    )
    record(
        "/rerank",
        {"query": "how do turbines spin",
         "passages": ["turbines spin when wind pushes the blades",
                      "olive groves cover the dry hills",
                      "the turbines stop in storms"]},
    )

    payload = {"version": 1, "cases": cases, "shared_answerable": shared}
    OUT.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    labels = [s["label"] for s in shared]
    print(f"wrote {len(cases)} cases and {len(shared)} shared answerable fixtures "
          f"({labels.count('Yes')} Yes / {labels.count('No')} No) to {OUT}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
