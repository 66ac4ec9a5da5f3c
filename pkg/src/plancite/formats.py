"""Rendering and parsing of the four citation formats.

A target sequence is ``<blueprint section> ||| <summary section>`` (or just
the summary section when there is no blueprint). The grammar:

  blueprint section   entry groups joined by " -- "; questions inside one
                      group joined by " // " (groups usually hold a single
                      question). "question_citations" prefixes each group
                      with "Qi: "; "blueprint_citations" suffixes each group
                      with the citation tokens of its sentence.
  summary section     sentences joined by single spaces. "inline" and
                      "question_citations" attach citation tokens after the
                      sentence: "[k]" per cited passage, concatenated as
                      "[1][3]". Under "question_citations" a sentence with a
                      blueprint entry instead carries one combined token
                      "[Qi, c1, c2]" (just "[Qi]" when it cites nothing).
                      "blueprint_citations" and "implicit" render sentences
                      bare.

" ||| ", " -- ", and " // " are reserved; strict rendering rejects texts
containing them, texts containing citation-shaped tokens, and sentence lists
the sentence segmenter would not re-split identically (that last check is
what makes parse an exact inverse). Robust parsing never raises on malformed
citations: bad tokens are dropped and counted.

Formats whose blueprint/sentence alignment is positional (inline,
blueprint_citations, implicit) round-trip exactly only for complete
blueprints; question_citations also round-trips blueprints with gaps since
the alignment is explicit in the "[Qi, ...]" tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import NamedTuple

from plancite.blueprint import Blueprint, BlueprintEntry
from plancite.corpus import (
    DEFAULT_ABBREVIATIONS,
    AnnotatedSummary,
    Sentence,
    segment_sentences,
)
from plancite.scoring import Question, QuestionOrigin

SECTION_SEP = " ||| "
ENTRY_SEP = " -- "
QUESTION_SEP = " // "
RESERVED = (SECTION_SEP, ENTRY_SEP, QUESTION_SEP)

FORMAT_INLINE = "inline"
FORMAT_QUESTION_CITATIONS = "question_citations"
FORMAT_BLUEPRINT_CITATIONS = "blueprint_citations"
FORMAT_IMPLICIT = "implicit"
FORMATS = (
    FORMAT_INLINE,
    FORMAT_QUESTION_CITATIONS,
    FORMAT_BLUEPRINT_CITATIONS,
    FORMAT_IMPLICIT,
)

KIND_ABSTRACTIVE = "abstractive"
KIND_EXTRACTIVE = "extractive"
KIND_NO_BLUEPRINT = "no_blueprint"
KINDS = (KIND_ABSTRACTIVE, KIND_EXTRACTIVE, KIND_NO_BLUEPRINT)

_CITE = re.compile(r"\[(\d+)\]")
_QREF = re.compile(r"\[Q(\d+)((?:, \d+)*)\]")
_ANY_TOKEN = re.compile(r"\[Q\d+(?:, \d+)*\]|\[\d+\]")
_Q_PREFIX = re.compile(r"^Q(\d+): ")
_TRAILING_CITES = re.compile(r" ((?:\[\d+\])+)$")


class FormatError(ValueError):
    """Grammar violation in strict mode; carries a character offset when the
    position is known."""

    def __init__(self, message: str, offset: int | None = None):
        super().__init__(f"{message} (offset {offset})" if offset is not None else message)
        self.offset = offset


@dataclass
class TargetSequence:
    text: str
    format: str
    kind: str


class ParseResult(NamedTuple):
    blueprint: Blueprint | None
    summary: AnnotatedSummary
    dropped: int


def _check_text(role: str, text: str) -> None:
    if not text.strip():
        raise FormatError(f"{role} is empty")
    for token in RESERVED:
        if token in text:
            raise FormatError(f"{role} contains reserved token {token!r}: {text!r}")
    if _ANY_TOKEN.search(text):
        raise FormatError(f"{role} contains a citation-shaped token: {text!r}")


def _cite_tokens(citations: list[int]) -> str:
    return "".join(f"[{c}]" for c in citations)


def render(
    bp: Blueprint | None,
    summary: AnnotatedSummary,
    format: str,
    n_passages: int | None = None,
) -> TargetSequence:
    """Serialize a blueprint and summary into one training target."""
    if format not in FORMATS:
        raise FormatError(f"unknown format: {format!r}")
    if not summary.sentences:
        raise FormatError("summary has no sentences")
    if bp is None:
        kind = KIND_NO_BLUEPRINT
        if format != FORMAT_INLINE:
            raise FormatError(f"format {format!r} requires a blueprint")
        entries: list[BlueprintEntry] = []
    else:
        kind = bp.kind
        entries = bp.entries
    if format == FORMAT_IMPLICIT and kind != KIND_EXTRACTIVE:
        raise FormatError("implicit format requires an extractive blueprint")

    n_sentences = len(summary.sentences)
    last = -1
    for entry in entries:
        if not 0 <= entry.sentence_index < n_sentences:
            raise FormatError(
                f"blueprint entry for nonexistent sentence {entry.sentence_index}"
            )
        if entry.sentence_index <= last:
            raise FormatError("blueprint entries must have strictly increasing sentence indices")
        last = entry.sentence_index
        if not entry.questions:
            raise FormatError(f"blueprint entry {entry.sentence_index} has no questions")
        for q in entry.questions:
            _check_text("question", q.text)

    for s in summary.sentences:
        _check_text("sentence", s.text)
        seen: set[int] = set()
        for c in s.citations:
            if c in seen:
                raise FormatError(f"sentence {s.index} cites passage {c} twice")
            seen.add(c)
            if c < 0 or (n_passages is not None and c >= n_passages):
                raise FormatError(f"sentence {s.index} cites out-of-range passage {c}")
    joined = " ".join(s.text for s in summary.sentences)
    if segment_sentences(joined) != [s.text for s in summary.sentences]:
        raise FormatError(
            "sentences do not survive re-segmentation; target would be ambiguous"
        )

    entry_by_sentence = {e.sentence_index: (i, e) for i, e in enumerate(entries)}

    groups = []
    for i, entry in enumerate(entries):
        group = QUESTION_SEP.join(q.text for q in entry.questions)
        if format == FORMAT_QUESTION_CITATIONS:
            group = f"Q{i + 1}: {group}"
        elif format == FORMAT_BLUEPRINT_CITATIONS:
            cites = summary.sentences[entry.sentence_index].citations
            if cites:
                group = f"{group} {_cite_tokens(cites)}"
        groups.append(group)

    rendered_sentences = []
    for s in summary.sentences:
        if format == FORMAT_INLINE:
            piece = f"{s.text} {_cite_tokens(s.citations)}" if s.citations else s.text
        elif format == FORMAT_QUESTION_CITATIONS:
            hit = entry_by_sentence.get(s.index)
            if hit is not None:
                qref = f"[Q{hit[0] + 1}" + "".join(f", {c}" for c in s.citations) + "]"
                piece = f"{s.text} {qref}"
            elif s.citations:
                piece = f"{s.text} {_cite_tokens(s.citations)}"
            else:
                piece = s.text
        else:  # blueprint_citations, implicit
            piece = s.text
        rendered_sentences.append(piece)
    summary_section = " ".join(rendered_sentences)

    if groups:
        text = ENTRY_SEP.join(groups) + SECTION_SEP + summary_section
    else:
        text = summary_section
    return TargetSequence(text=text, format=format, kind=kind)


def _scan_summary(section: str, base_offset: int):
    """Yield ("text", chunk, offset) and ("cite"/"qref", payload, offset)."""
    pos = 0
    for m in _ANY_TOKEN.finditer(section):
        if m.start() > pos:
            yield "text", section[pos : m.start()], base_offset + pos
        token = m.group(0)
        qm = _QREF.fullmatch(token)
        if qm:
            cites = [int(x) for x in qm.group(2).split(", ") if x] if qm.group(2) else []
            yield "qref", (int(qm.group(1)), cites), base_offset + m.start()
        else:
            yield "cite", int(_CITE.fullmatch(token).group(1)), base_offset + m.start()
        pos = m.end()
    if pos < len(section):
        yield "text", section[pos:], base_offset + pos


def parse(
    text: str,
    format: str,
    kind: str,
    n_passages: int | None = None,
    provenance: dict[str, int] | None = None,
    strict: bool = True,
    abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS,
) -> ParseResult:
    """Invert :func:`render`.

    Strict mode raises FormatError on any grammar violation; robust mode
    (``strict=False``) drops malformed citation tokens, counts them in
    ``ParseResult.dropped``, and never raises on content.

    ``provenance`` maps question text to passage id; for the implicit format
    it restores question origins and the inferred sentence citations.
    """
    if format not in FORMATS:
        raise FormatError(f"unknown format: {format!r}")
    if kind not in KINDS:
        raise FormatError(f"unknown kind: {kind!r}")
    if format == FORMAT_IMPLICIT and kind != KIND_EXTRACTIVE:
        raise FormatError("implicit format requires kind 'extractive'")
    if kind == KIND_NO_BLUEPRINT and format != FORMAT_INLINE:
        raise FormatError("kind 'no_blueprint' only pairs with the inline format")

    dropped = 0
    fields = text.split(SECTION_SEP)
    if kind == KIND_NO_BLUEPRINT:
        if len(fields) > 1:
            if strict:
                raise FormatError("unexpected blueprint section", offset=text.find(SECTION_SEP))
            fields = [fields[-1]]
        bp_section, summary_section = None, fields[0]
        summary_offset = len(text) - len(fields[0])
    elif len(fields) == 1:
        bp_section, summary_section = None, fields[0]
        summary_offset = 0
    elif len(fields) == 2:
        bp_section, summary_section = fields
        summary_offset = len(bp_section) + len(SECTION_SEP)
    else:
        if strict:
            offset = text.find(SECTION_SEP, text.find(SECTION_SEP) + 1)
            raise FormatError("more than one section separator", offset=offset)
        bp_section = fields[0]
        summary_section = SECTION_SEP.join(fields[1:])
        summary_offset = len(fields[0]) + len(SECTION_SEP)

    # Blueprint section -> (questions, group citations) per group.
    raw_groups: list[tuple[list[str], list[int]]] = []
    if bp_section is not None:
        offset = 0
        for group_index, group in enumerate(bp_section.split(ENTRY_SEP)):
            group_offset = offset
            offset += len(group) + len(ENTRY_SEP)
            if format == FORMAT_QUESTION_CITATIONS:
                pm = _Q_PREFIX.match(group)
                if pm is None or int(pm.group(1)) != group_index + 1:
                    if strict:
                        raise FormatError(
                            f"blueprint group {group_index + 1} lacks 'Q{group_index + 1}: ' prefix",
                            offset=group_offset,
                        )
                else:
                    group = group[pm.end():]
            group_cites: list[int] = []
            if format == FORMAT_BLUEPRINT_CITATIONS:
                tm = _TRAILING_CITES.search(group)
                if tm:
                    group_cites = [int(x) for x in _CITE.findall(tm.group(1))]
                    group = group[: tm.start()]
            questions = group.split(QUESTION_SEP)
            if any(not q.strip() for q in questions):
                if strict:
                    raise FormatError(
                        f"blueprint group {group_index + 1} has an empty question",
                        offset=group_offset,
                    )
                questions = [q for q in questions if q.strip()]
            if not questions:
                if strict:
                    raise FormatError("empty blueprint group", offset=group_offset)
                dropped += 1
                continue
            raw_groups.append((questions, group_cites))

    # Summary section -> sentences with citations and question references.
    sentences: list[dict] = []
    open_index: int | None = None
    for what, payload, offset in _scan_summary(summary_section, summary_offset):
        if what == "text":
            if not payload.strip():
                continue
            segs = segment_sentences(payload, abbreviations)
            if (
                open_index is not None
                and segs
                and not sentences[open_index]["text"].endswith((".", "!", "?"))
            ):
                # A citation appeared mid-sentence: glue the continuation back.
                sentences[open_index]["text"] += " " + segs[0]
                segs = segs[1:]
            for seg in segs:
                sentences.append({"text": seg, "cites": [], "qref": None})
            if sentences:
                open_index = len(sentences) - 1
        elif what == "cite":
            bare_summary = format in (FORMAT_BLUEPRINT_CITATIONS, FORMAT_IMPLICIT)
            if open_index is None or bare_summary:
                if strict:
                    raise FormatError("unexpected citation token", offset=offset)
                dropped += 1
                continue
            target = sentences[open_index]
            bad = payload < 0 or (n_passages is not None and payload >= n_passages)
            if bad or payload in target["cites"]:
                if strict:
                    raise FormatError(f"invalid citation [{payload}]", offset=offset)
                dropped += 1
                continue
            target["cites"].append(payload)
        else:  # qref
            qn, cites = payload
            if open_index is None or format != FORMAT_QUESTION_CITATIONS:
                if strict:
                    raise FormatError("unexpected question reference", offset=offset)
                dropped += 1
                continue
            target = sentences[open_index]
            ok = (
                target["qref"] is None
                and 1 <= qn <= len(raw_groups)
                and all(
                    0 <= c and (n_passages is None or c < n_passages) for c in cites
                )
                and len(set(cites)) == len(cites)
            )
            if not ok:
                if strict:
                    raise FormatError(f"invalid question reference [Q{qn}, ...]", offset=offset)
                dropped += 1
                continue
            target["qref"] = qn
            target["cites"] = list(cites)

    if not sentences:
        if strict:
            raise FormatError("summary section is empty")
        summary = AnnotatedSummary(sentences=[])
        return ParseResult(None if kind == KIND_NO_BLUEPRINT else Blueprint([], kind), summary, dropped)

    # Align blueprint groups to sentences.
    blueprint: Blueprint | None
    if kind == KIND_NO_BLUEPRINT:
        blueprint = None
    else:
        entries = []
        if format == FORMAT_QUESTION_CITATIONS:
            ref_to_sentence: dict[int, int] = {}
            for i, s in enumerate(sentences):
                if s["qref"] is not None:
                    if s["qref"] in ref_to_sentence:
                        if strict:
                            raise FormatError(f"question Q{s['qref']} referenced twice")
                        dropped += 1
                        s["qref"] = None
                        continue
                    ref_to_sentence[s["qref"]] = i
            for group_index, (questions, _) in enumerate(raw_groups):
                sentence_index = ref_to_sentence.get(group_index + 1)
                if sentence_index is None:
                    if strict:
                        raise FormatError(f"blueprint question Q{group_index + 1} is never referenced")
                    dropped += 1
                    continue
                entries.append(
                    _make_entry(sentence_index, questions, kind, provenance)
                )
        else:
            if len(raw_groups) > len(sentences):
                if strict:
                    raise FormatError(
                        f"{len(raw_groups)} blueprint groups for {len(sentences)} sentences"
                    )
                raw_groups = raw_groups[: len(sentences)]
            for i, (questions, group_cites) in enumerate(raw_groups):
                entries.append(_make_entry(i, questions, kind, provenance))
                if format == FORMAT_BLUEPRINT_CITATIONS:
                    sentences[i]["cites"] = group_cites
        blueprint = Blueprint(entries=entries, kind=kind)
        if format == FORMAT_IMPLICIT and provenance is not None:
            for entry in blueprint.entries:
                cites = []
                for q in entry.questions:
                    pid = q.origin.index if q.origin else None
                    if pid is not None and pid not in cites:
                        cites.append(pid)
                sentences[entry.sentence_index]["cites"] = cites

    summary = AnnotatedSummary(
        sentences=[
            Sentence(index=i, text=s["text"], citations=s["cites"])
            for i, s in enumerate(sentences)
        ]
    )
    return ParseResult(blueprint, summary, dropped)


def _make_entry(
    sentence_index: int,
    question_texts: list[str],
    kind: str,
    provenance: dict[str, int] | None,
) -> BlueprintEntry:
    questions = []
    for text in question_texts:
        origin = None
        if provenance is not None and text in provenance:
            origin = QuestionOrigin(kind="passage", index=provenance[text])
        questions.append(Question(text=text, style="general", origin=origin))
    return BlueprintEntry(sentence_index=sentence_index, questions=questions)


def parse_inline_summary(
    text: str,
    citation_base: int = 0,
    abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS,
) -> AnnotatedSummary:
    """Turn a summary string with embedded "[k]" tokens into structured form.

    Used at ingestion time. Citation tokens attach to the sentence they
    follow (a trailing token after the final period attaches to the last
    sentence; a mid-sentence token attaches to the sentence it interrupts).
    """
    result = parse(
        text,
        FORMAT_INLINE,
        KIND_NO_BLUEPRINT,
        strict=False,
        abbreviations=abbreviations,
    )
    if citation_base:
        for s in result.summary.sentences:
            s.citations = [c - citation_base for c in s.citations]
    return result.summary


def strip_citations(text: str) -> str:
    """Remove citation tokens ("[3]", "[Q2, 1]") and tidy the whitespace."""
    stripped = _ANY_TOKEN.sub("", text)
    return re.sub(r"  +", " ", stripped).strip()


def resolve_implicit_citations(bp: Blueprint, summary: AnnotatedSummary) -> AnnotatedSummary:
    """Citations inferred from extractive provenance.

    Sentence i cites the passages that contributed the questions of its
    blueprint entry; sentences without an entry cite nothing.
    """
    if bp.kind != KIND_EXTRACTIVE:
        raise FormatError("implicit citations require an extractive blueprint")
    by_sentence: dict[int, list[int]] = {}
    for entry in bp.entries:
        cites: list[int] = []
        for q in entry.questions:
            if q.origin is None or q.origin.kind != "passage":
                raise FormatError(
                    f"question without passage provenance in entry {entry.sentence_index}"
                )
            if q.origin.index not in cites:
                cites.append(q.origin.index)
        by_sentence[entry.sentence_index] = cites
    return AnnotatedSummary(
        sentences=[
            Sentence(index=s.index, text=s.text, citations=by_sentence.get(s.index, []))
            for s in summary.sentences
        ]
    )
