"""Data model and ingestion for (query, passages, summary) records.

Records are stored as line-delimited JSON; see docs/record_schema.md. A
summary may come in either as a plain string with embedded "[k]" citation
tokens (parsed into structured citations during ingestion) or already
structured as {"sentences": [{"text": ..., "citations": [...]}]}.

Unknown top-level fields on a record line are preserved verbatim in
``Record.extras`` so pipeline stages can attach artifacts (blueprints,
rendered targets, metrics) without this module knowing their shapes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Any, Callable

DEFAULT_ABBREVIATIONS = (
    "dr.", "mr.", "mrs.", "ms.", "e.g.", "i.e.", "etc.", "vs.", "u.s.",
)

_BOUNDARY = re.compile(r"([.!?]+) (?=[A-Z0-9])")

_CORE_FIELDS = ("id", "query", "passages", "summary")


class RecordError(ValueError):
    """Validation or parse failure for a record file.

    Carries the 1-based line number and, when known, the record id.
    """

    def __init__(self, message: str, line: int | None = None, record_id: str | None = None):
        parts = []
        if line is not None:
            parts.append(f"line {line}")
        if record_id is not None:
            parts.append(f"record {record_id!r}")
        prefix = " ".join(parts)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.record_id = record_id


@dataclass
class Passage:
    id: int
    text: str


@dataclass
class Sentence:
    index: int
    text: str
    citations: list[int] = field(default_factory=list)


@dataclass
class AnnotatedSummary:
    sentences: list[Sentence]

    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)


@dataclass
class Record:
    record_id: str
    query: str
    passages: list[Passage]
    reference_summary: AnnotatedSummary | None = None
    extras: dict[str, Any] = field(default_factory=dict)

    def passage_text(self, pid: int) -> str:
        return self.passages[pid].text


def segment_sentences(
    text: str, abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS
) -> list[str]:
    """Split text into sentences.

    Splits after a run of ``.!?`` followed by a space and an uppercase letter
    or digit, unless the token ending at the terminator is on the
    abbreviation guard list. Whitespace is normalized first, so joining the
    result with single spaces reproduces the normalized input.
    """
    norm = " ".join(text.split())
    if not norm:
        return []
    cuts = []
    for m in _BOUNDARY.finditer(norm):
        end = m.end(1)  # position just past the terminator run
        token = norm[: end].rsplit(" ", 1)[-1].lower()
        if _is_abbreviation(token, abbreviations):
            continue
        cuts.append(end)
    sentences = []
    start = 0
    for cut in cuts:
        sentences.append(norm[start:cut])
        start = cut + 1  # skip the single separating space
    sentences.append(norm[start:])
    return [s for s in sentences if s]


def _is_abbreviation(token: str, abbreviations: tuple[str, ...]) -> bool:
    for abbr in abbreviations:
        if token == abbr:
            return True
        if token.endswith(abbr) and not token[: -len(abbr)][-1:].isalnum():
            return True
    return False


def rerank_passages(
    query: str,
    passages: list[Passage],
    relevance_scorer: Callable[[str, str], float],
) -> tuple[list[Passage], dict[int, int]]:
    """Reorder passages by descending relevance to the query.

    Ties keep the original order. Ids are reassigned 0..n-1 in the new
    order; the returned map takes old ids to new ids so existing citations
    can be remapped.
    """
    scored = []
    for p in passages:
        try:
            score = float(relevance_scorer(query, p.text))
        except Exception as exc:
            raise RecordError(f"relevance scorer failed on passage {p.id}: {exc}") from exc
        if score != score or score in (float("inf"), float("-inf")):
            raise RecordError(f"relevance scorer returned non-finite score on passage {p.id}")
        scored.append((p, score))
    ranked = sorted(scored, key=lambda t: (-t[1], t[0].id))
    id_map = {p.id: new for new, (p, _) in enumerate(ranked)}
    reranked = [Passage(id=new, text=p.text) for new, (p, _) in enumerate(ranked)]
    return reranked, id_map


def remap_citations(summary: AnnotatedSummary, id_map: dict[int, int]) -> AnnotatedSummary:
    return AnnotatedSummary(
        sentences=[
            Sentence(index=s.index, text=s.text, citations=[id_map[c] for c in s.citations])
            for s in summary.sentences
        ]
    )


def validate_record(record: Record, line: int | None = None) -> None:
    if not record.query.strip():
        raise RecordError("query is empty", line, record.record_id)
    if not record.passages:
        raise RecordError("record has no passages", line, record.record_id)
    for expected, p in enumerate(record.passages):
        if p.id != expected:
            raise RecordError(
                f"passage ids must be 0..n-1 in order, got {p.id} at position {expected}",
                line, record.record_id,
            )
        if not p.text.strip():
            raise RecordError(f"passage {p.id} is empty", line, record.record_id)
        if re.search(r"\[\d+\]", p.text):
            raise RecordError(
                f"passage {p.id} contains a citation-shaped token", line, record.record_id
            )
    if record.reference_summary is not None:
        validate_summary(record.reference_summary, len(record.passages), line, record.record_id)


def validate_summary(
    summary: AnnotatedSummary,
    n_passages: int,
    line: int | None = None,
    record_id: str | None = None,
) -> None:
    if not summary.sentences:
        raise RecordError("summary has no sentences", line, record_id)
    for expected, s in enumerate(summary.sentences):
        if s.index != expected:
            raise RecordError(
                f"sentence indices must be contiguous from 0, got {s.index}", line, record_id
            )
        if not s.text.strip():
            raise RecordError(f"sentence {s.index} is empty", line, record_id)
        if re.search(r"\[(?:Q?\d+(?:, \d+)*)\]", s.text):
            raise RecordError(
                f"sentence {s.index} text contains an embedded citation token",
                line, record_id,
            )
        seen: set[int] = set()
        for c in s.citations:
            if c in seen:
                raise RecordError(
                    f"sentence {s.index} cites passage {c} twice", line, record_id
                )
            seen.add(c)
            if not 0 <= c < n_passages:
                raise RecordError(
                    f"sentence {s.index} cites passage {c}, out of range for "
                    f"{n_passages} passages",
                    line, record_id,
                )


def _summary_from_obj(
    obj: Any,
    n_passages: int,
    citation_base: int,
    abbreviations: tuple[str, ...],
    line: int | None,
    record_id: str | None,
) -> AnnotatedSummary:
    # Deferred import: formats depends on this module for its types.
    from plancite import formats

    if isinstance(obj, str):
        summary = formats.parse_inline_summary(
            obj, citation_base=citation_base, abbreviations=abbreviations
        )
    elif isinstance(obj, dict) and isinstance(obj.get("sentences"), list):
        sentences = []
        for i, s in enumerate(obj["sentences"]):
            if not isinstance(s, dict) or "text" not in s:
                raise RecordError(f"sentence {i} missing 'text'", line, record_id)
            citations = [int(c) - citation_base for c in s.get("citations", [])]
            sentences.append(Sentence(index=i, text=str(s["text"]), citations=citations))
        summary = AnnotatedSummary(sentences=sentences)
    else:
        raise RecordError("summary must be a string or {'sentences': [...]}", line, record_id)
    validate_summary(summary, n_passages, line, record_id)
    return summary


def record_from_dict(
    obj: dict,
    line: int | None = None,
    citation_base: int = 0,
    abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS,
) -> Record:
    if not isinstance(obj, dict):
        raise RecordError("record line is not an object", line)
    record_id = str(obj.get("id") or (f"r{line:05d}" if line is not None else "r?"))
    if "query" not in obj or "passages" not in obj:
        raise RecordError("record needs 'query' and 'passages'", line, record_id)
    raw_passages = obj["passages"]
    if not isinstance(raw_passages, list):
        raise RecordError("'passages' must be a list", line, record_id)
    passages = []
    for i, p in enumerate(raw_passages):
        text = p if isinstance(p, str) else p.get("text", "") if isinstance(p, dict) else ""
        passages.append(Passage(id=i, text=str(text)))
    summary = None
    if obj.get("summary") is not None:
        summary = _summary_from_obj(
            obj["summary"], len(passages), citation_base, abbreviations, line, record_id
        )
    extras = {k: v for k, v in obj.items() if k not in _CORE_FIELDS}
    record = Record(
        record_id=record_id,
        query=str(obj["query"]),
        passages=passages,
        reference_summary=summary,
        extras=extras,
    )
    validate_record(record, line)
    return record


def record_to_dict(record: Record) -> dict:
    obj: dict[str, Any] = {
        "id": record.record_id,
        "query": record.query,
        "passages": [p.text for p in record.passages],
    }
    if record.reference_summary is not None:
        obj["summary"] = {
            "sentences": [
                {"text": s.text, "citations": list(s.citations)}
                for s in record.reference_summary.sentences
            ]
        }
    obj.update(record.extras)
    return obj


def load_records(
    path: str,
    citation_base: int = 0,
    abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS,
) -> list[Record]:
    """Read a line-delimited record file in order.

    Raises RecordError with the 1-based line number on malformed lines and
    with the record id on validation failures.
    """
    records = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise RecordError(f"malformed JSON: {exc}", line_no) from exc
            records.append(
                record_from_dict(
                    obj, line=line_no, citation_base=citation_base,
                    abbreviations=abbreviations,
                )
            )
    return records


def save_records(records: list[Record], path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record_to_dict(record), ensure_ascii=False, sort_keys=True))
            fh.write("\n")
