"""Parsing, validation, and serialization of external data formats.

Formats handled here:
- qrels: ``<topic> <iter> <doc> <grade>`` per line (iteration read and
  discarded, written back as ``0``)
- run: ``<topic> Q0 <doc> <rank> <score> <tag>`` per line
- aggregate qrels: like qrels but the grade may be fractional
- annotation log: one JSON record per line (judgment/narrative/flag events)

Any run of spaces/tabs separates fields; blank lines are skipped; every
rejection carries a 1-based line number.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from datetime import datetime
from fractions import Fraction
from typing import Iterable, Iterator, TextIO, Union

from .errors import (
    ConflictError,
    FormatError,
    GradeRangeError,
    ParseError,
    TagError,
)

TopicId = str
DocId = str

# Integer grades come from parsing; Fractions only ever from aggregation.
GradeValue = Union[int, Fraction]

GRADE_MIN = 0
GRADE_MAX = 3

PROVENANCES = ("primary", "secondary", "aggregate")


def as_grade_value(value: GradeValue) -> GradeValue:
    """Normalize a grade: integral Fractions collapse to int, range-checked."""
    if isinstance(value, Fraction) and value.denominator == 1:
        value = int(value)
    if not (GRADE_MIN <= value <= GRADE_MAX):
        raise GradeRangeError(f"grade {value} outside [{GRADE_MIN}, {GRADE_MAX}]")
    return value


@dataclass
class AnnotationSet:
    """One annotator's judgments: (topic, doc) -> grade.

    ``provenance`` records whether the set came from the official judgments
    (primary), a re-annotation (secondary), or an aggregation/combination
    (aggregate).
    """

    annotator: str
    judgments: dict[tuple[TopicId, DocId], GradeValue] = field(default_factory=dict)
    provenance: str = "primary"

    def __post_init__(self) -> None:
        if self.provenance not in PROVENANCES:
            raise FormatError(f"unknown provenance {self.provenance!r}")

    def __len__(self) -> int:
        return len(self.judgments)

    def topics(self) -> list[TopicId]:
        return sorted({t for t, _ in self.judgments})

    def grade(self, topic: TopicId, doc: DocId) -> GradeValue | None:
        return self.judgments.get((topic, doc))

    def by_topic(self, topic: TopicId) -> dict[DocId, GradeValue]:
        return {d: g for (t, d), g in self.judgments.items() if t == topic}

    def has_fractional(self) -> bool:
        return any(isinstance(g, Fraction) for g in self.judgments.values())

    def restricted(self, topics: Iterable[TopicId]) -> "AnnotationSet":
        """Copy containing only judgments for the given topics."""
        wanted = set(topics)
        return AnnotationSet(
            annotator=self.annotator,
            judgments={k: v for k, v in self.judgments.items() if k[0] in wanted},
            provenance=self.provenance,
        )


@dataclass(frozen=True)
class RunEntry:
    topic: TopicId
    doc: DocId
    rank: int
    score: float
    tag: str


@dataclass
class Run:
    """A system's ranked output, per topic sorted by ascending rank."""

    tag: str
    by_topic: dict[TopicId, list[RunEntry]] = field(default_factory=dict)

    def topics(self) -> list[TopicId]:
        return sorted(self.by_topic)

    def ranking(self, topic: TopicId) -> list[DocId]:
        return [e.doc for e in self.by_topic.get(topic, [])]


# ---------------------------------------------------------------------------
# line handling


Source = Union[str, bytes, TextIO, Iterable[str]]


def _lines(source: Source) -> Iterator[tuple[int, str]]:
    """Yield (line_no, line) for non-blank lines of a text source."""
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if isinstance(source, str):
        source = io.StringIO(source)
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            continue
        yield line_no, line


# ---------------------------------------------------------------------------
# qrels


def _parse_qrels_fields(
    source: Source, parse_grade
) -> dict[tuple[TopicId, DocId], GradeValue]:
    judgments: dict[tuple[TopicId, DocId], GradeValue] = {}
    for line_no, line in _lines(source):
        fields = line.split()
        if len(fields) != 4:
            raise ParseError(line_no, f"expected 4 fields, got {len(fields)}: {line!r}")
        topic, _iteration, doc, grade_str = fields
        try:
            grade = parse_grade(grade_str)
        except ValueError:
            raise ParseError(line_no, f"invalid grade {grade_str!r}") from None
        if not (GRADE_MIN <= grade <= GRADE_MAX):
            raise GradeRangeError(
                f"line {line_no}: grade {grade_str} outside [{GRADE_MIN}, {GRADE_MAX}]"
            )
        key = (topic, doc)
        if key in judgments and judgments[key] != grade:
            raise ConflictError(
                f"line {line_no}: conflicting grades for {topic}/{doc}: "
                f"{judgments[key]} vs {grade}"
            )
        judgments[key] = grade
    return judgments


def parse_qrels(source: Source, annotator: str = "qrels", provenance: str = "primary") -> AnnotationSet:
    """Parse integer-graded qrels into an AnnotationSet."""
    judgments = _parse_qrels_fields(source, int)
    return AnnotationSet(annotator=annotator, judgments=judgments, provenance=provenance)


def parse_fractional_qrels(
    source: Source, annotator: str = "aggregate", provenance: str = "aggregate"
) -> AnnotationSet:
    """Parse the aggregate qrels format, where grades may be fractional."""
    judgments = _parse_qrels_fields(source, lambda s: as_grade_value(Fraction(s)))
    return AnnotationSet(annotator=annotator, judgments=judgments, provenance=provenance)


def _format_exact_decimal(value: Fraction) -> str:
    """Exact decimal for terminating fractions (1.5), float repr otherwise."""
    denom = value.denominator
    twos = fives = 0
    while denom % 2 == 0:
        denom //= 2
        twos += 1
    while denom % 5 == 0:
        denom //= 5
        fives += 1
    if denom != 1:
        return repr(float(value))
    places = max(twos, fives)
    if places == 0:
        return str(value.numerator)
    scaled = value.numerator * 10**places // value.denominator
    text = str(abs(scaled)).rjust(places + 1, "0")
    sign = "-" if scaled < 0 else ""
    return f"{sign}{text[:-places]}.{text[-places:]}"


def format_grade_value(grade: GradeValue) -> str:
    if isinstance(grade, Fraction):
        return _format_exact_decimal(grade)
    return str(grade)


def export_qrels(annotation_set: AnnotationSet) -> str:
    """Serialize an integer-graded set; sorted by (topic, doc), LF endings."""
    if annotation_set.has_fractional():
        raise FormatError(
            "set contains fractional grades; use export_fractional_qrels"
        )
    lines = [
        f"{topic} 0 {doc} {grade}\n"
        for (topic, doc), grade in sorted(annotation_set.judgments.items())
    ]
    return "".join(lines)


def export_fractional_qrels(annotation_set: AnnotationSet) -> str:
    """Serialize a set that may contain fractional grades."""
    lines = [
        f"{topic} 0 {doc} {format_grade_value(grade)}\n"
        for (topic, doc), grade in sorted(annotation_set.judgments.items())
    ]
    return "".join(lines)


# ---------------------------------------------------------------------------
# runs


def parse_run(source: Source) -> Run:
    """Parse a TREC run file.

    Entries are re-sorted by (score descending, doc ascending) and ranks
    renumbered 1..n; the rank column in the wild is often inconsistent, so it
    is read for format validation only.
    """
    tag: str | None = None
    raw: dict[TopicId, dict[DocId, float]] = {}
    for line_no, line in _lines(source):
        fields = line.split()
        if len(fields) != 6:
            raise ParseError(line_no, f"expected 6 fields, got {len(fields)}: {line!r}")
        topic, _iteration, doc, rank_str, score_str, line_tag = fields
        try:
            int(rank_str)
        except ValueError:
            raise ParseError(line_no, f"invalid rank {rank_str!r}") from None
        try:
            score = float(score_str)
        except ValueError:
            raise ParseError(line_no, f"invalid score {score_str!r}") from None
        if tag is None:
            tag = line_tag
        elif line_tag != tag:
            raise TagError(
                f"line {line_no}: mixed tags {tag!r} and {line_tag!r} in one run file"
            )
        topic_entries = raw.setdefault(topic, {})
        if doc in topic_entries:
            raise ConflictError(f"line {line_no}: duplicate entry for {topic}/{doc}")
        topic_entries[doc] = score
    if tag is None:
        raise ParseError(1, "empty run file")
    return _normalize(tag, raw)


def _normalize(tag: str, raw: dict[TopicId, dict[DocId, float]]) -> Run:
    by_topic: dict[TopicId, list[RunEntry]] = {}
    for topic, scores in raw.items():
        ordered = sorted(scores.items(), key=lambda item: (-item[1], item[0]))
        by_topic[topic] = [
            RunEntry(topic=topic, doc=doc, rank=i, score=score, tag=tag)
            for i, (doc, score) in enumerate(ordered, start=1)
        ]
    return Run(tag=tag, by_topic=by_topic)


def normalize_run(run: Run) -> Run:
    """Re-apply run normalization; idempotent."""
    raw = {
        topic: {e.doc: e.score for e in entries}
        for topic, entries in run.by_topic.items()
    }
    return _normalize(run.tag, raw)


def export_run(run: Run) -> str:
    """Serialize a run in TREC format, scores at full precision."""
    lines = []
    for topic in run.topics():
        for entry in run.by_topic[topic]:
            lines.append(
                f"{topic} Q0 {entry.doc} {entry.rank} {entry.score!r} {run.tag}\n"
            )
    return "".join(lines)


# ---------------------------------------------------------------------------
# annotation log


@dataclass(frozen=True)
class JudgmentEvent:
    annotator: str
    topic: TopicId
    doc: DocId
    grade: int
    timestamp: str


@dataclass(frozen=True)
class NarrativeEvent:
    annotator: str
    topic: TopicId
    narrative_text: str
    timestamp: str


@dataclass(frozen=True)
class FlagEvent:
    annotator: str
    topic: TopicId
    doc: DocId | None
    note: str
    timestamp: str


AnnotationEvent = Union[JudgmentEvent, NarrativeEvent, FlagEvent]


def _require(record: dict, key: str, line_no: int) -> object:
    if key not in record or record[key] in (None, ""):
        raise ParseError(line_no, f"missing field {key!r} in {record.get('event_type')!r} event")
    return record[key]


def _check_timestamp(value: object, line_no: int) -> str:
    if not isinstance(value, str):
        raise ParseError(line_no, f"timestamp must be a string, got {value!r}")
    try:
        datetime.fromisoformat(value)
    except ValueError:
        raise ParseError(line_no, f"timestamp {value!r} is not ISO-8601") from None
    return value


def parse_annotation_log(source: Source) -> list[AnnotationEvent]:
    """Parse the line-delimited annotation log, in file order.

    Replay halts on the first malformed record; there is no partial silent
    recovery.
    """
    events: list[AnnotationEvent] = []
    for line_no, line in _lines(source):
        try:
            record = json.loads(line)
        except json.JSONDecodeError:
            raise ParseError(line_no, f"malformed record: {line!r}") from None
        if not isinstance(record, dict):
            raise ParseError(line_no, f"record is not an object: {line!r}")
        event_type = record.get("event_type")
        annotator = str(_require(record, "annotator", line_no))
        timestamp = _check_timestamp(_require(record, "timestamp", line_no), line_no)
        topic = str(_require(record, "topic", line_no))
        if event_type == "judgment":
            doc = str(_require(record, "doc", line_no))
            grade = record.get("grade")
            if not isinstance(grade, int) or isinstance(grade, bool):
                raise ParseError(line_no, f"judgment grade must be an integer, got {grade!r}")
            if not (GRADE_MIN <= grade <= GRADE_MAX):
                raise ParseError(line_no, f"grade {grade} outside [{GRADE_MIN}, {GRADE_MAX}]")
            events.append(JudgmentEvent(annotator, topic, doc, grade, timestamp))
        elif event_type == "narrative":
            text = str(_require(record, "narrative_text", line_no))
            events.append(NarrativeEvent(annotator, topic, text, timestamp))
        elif event_type == "flag":
            note = str(_require(record, "note", line_no))
            doc_value = record.get("doc")
            doc = str(doc_value) if doc_value not in (None, "") else None
            events.append(FlagEvent(annotator, topic, doc, note, timestamp))
        else:
            raise ParseError(line_no, f"unknown event_type {event_type!r}")
    return events


def serialize_event(event: AnnotationEvent) -> str:
    """One JSON line for an event, newline-terminated."""
    if isinstance(event, JudgmentEvent):
        record = {
            "event_type": "judgment",
            "annotator": event.annotator,
            "topic": event.topic,
            "doc": event.doc,
            "grade": event.grade,
            "timestamp": event.timestamp,
        }
    elif isinstance(event, NarrativeEvent):
        record = {
            "event_type": "narrative",
            "annotator": event.annotator,
            "topic": event.topic,
            "narrative_text": event.narrative_text,
            "timestamp": event.timestamp,
        }
    elif isinstance(event, FlagEvent):
        record = {
            "event_type": "flag",
            "annotator": event.annotator,
            "topic": event.topic,
            "doc": event.doc,
            "note": event.note,
            "timestamp": event.timestamp,
        }
    else:  # pragma: no cover - guarded by the type union
        raise FormatError(f"unknown event {event!r}")
    return json.dumps(record, sort_keys=True) + "\n"


def fold_judgments(events: Iterable[AnnotationEvent]) -> dict[str, AnnotationSet]:
    """Fold judgment events into per-annotator sets, later events winning."""
    sets: dict[str, AnnotationSet] = {}
    for event in events:
        if not isinstance(event, JudgmentEvent):
            continue
        target = sets.setdefault(
            event.annotator,
            AnnotationSet(annotator=event.annotator, provenance="secondary"),
        )
        target.judgments[(event.topic, event.doc)] = event.grade
    return sets
