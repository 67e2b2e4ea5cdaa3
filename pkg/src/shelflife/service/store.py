"""Durable annotation state: append-only event log plus task queues.

The log is the single source of truth. Every accepted event is written,
flushed, and fsynced before the call returns, so an acknowledged judgment
survives a crash; reads fold the log (last write wins for judgments,
narratives keep all versions). Annotators never see primary grades: the
store holds task lists and document texts only.
"""

from __future__ import annotations

import json
import os
import random
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Iterable

from ..errors import (
    ConfigurationError,
    OwnershipError,
    ParseError,
    ReplayError,
    UnknownAnnotatorError,
    ValidationError,
)
from ..trec_io import (
    AnnotationEvent,
    AnnotationSet,
    DocId,
    FlagEvent,
    GRADE_MAX,
    GRADE_MIN,
    JudgmentEvent,
    NarrativeEvent,
    TopicId,
    parse_annotation_log,
    serialize_event,
)

GRADE_LABELS = {
    3: "perfectly relevant",
    2: "highly relevant",
    1: "related",
    0: "non-relevant",
}

# Default guideline text shown next to each grade control.
GRADE_GUIDELINES = {
    3: "The passage is dedicated to the query and contains the exact answer.",
    2: "The passage has some answer for the query, but the answer may be a "
    "bit unclear, or hidden amongst extraneous information.",
    1: "The passage seems related to the query but does not answer it.",
    0: "The passage has nothing to do with the query.",
}


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class Task:
    annotator: str
    topic: TopicId
    title: str
    doc: DocId
    text: str
    position: int
    remaining: int


@dataclass
class ServiceConfig:
    search_url_template: str | None = None
    grade_labels: dict[int, str] = field(default_factory=lambda: dict(GRADE_LABELS))
    grade_guidelines: dict[int, str] = field(
        default_factory=lambda: dict(GRADE_GUIDELINES)
    )


class EventLog:
    """Append-only JSONL event log with per-record durable commit."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._handle = open(self.path, "a", encoding="utf-8")

    def append(self, event: AnnotationEvent) -> None:
        """Write one event durably; returning implies the record is synced."""
        self._handle.write(serialize_event(event))
        self._handle.flush()
        os.fsync(self._handle.fileno())

    def close(self) -> None:
        self._handle.close()


def recover_log(path: str | Path) -> list[AnnotationEvent]:
    """Replay the log, dropping a torn (newline-less) trailing fragment.

    A torn fragment can only come from a crash mid-append, before the
    record was acknowledged, so truncating it never loses an acknowledged
    event. Any other malformed record halts replay.
    """
    path = Path(path)
    if not path.exists():
        return []
    data = path.read_bytes()
    if data and not data.endswith(b"\n"):
        cut = data.rfind(b"\n") + 1
        path.write_bytes(data[:cut])
        data = data[:cut]
    try:
        return parse_annotation_log(data)
    except ParseError as exc:
        raise ReplayError(f"cannot replay {path}: {exc}") from exc


def load_corpus(source: str | Path | Iterable[str]) -> dict[DocId, str]:
    """Line-delimited corpus records: {"doc": id, "text": passage}."""
    if isinstance(source, (str, Path)):
        source = Path(source).read_text(encoding="utf-8").splitlines()
    corpus = {}
    for line_no, line in enumerate(source, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            corpus[str(record["doc"])] = str(record["text"])
        except (json.JSONDecodeError, KeyError, TypeError):
            raise ParseError(line_no, f"bad corpus record: {line!r}") from None
    return corpus


def load_roster(source: str | Path) -> tuple[dict[str, str], str]:
    """Roster file: {"annotators": {id: token}, "admin_token": token}."""
    record = json.loads(Path(source).read_text(encoding="utf-8"))
    try:
        annotators = {str(k): str(v) for k, v in record["annotators"].items()}
        admin_token = str(record["admin_token"])
    except (KeyError, AttributeError, TypeError):
        raise ConfigurationError(f"bad roster file {source}") from None
    if len(set(annotators.values())) != len(annotators):
        raise ConfigurationError("annotator tokens must be unique")
    if admin_token in annotators.values():
        raise ConfigurationError("admin token must differ from annotator tokens")
    return annotators, admin_token


class AnnotationStore:
    """Task queues, ownership checks, and durable event capture."""

    def __init__(
        self,
        log_path: str | Path,
        tasks: dict[str, list[tuple[TopicId, DocId]]],
        titles: dict[TopicId, str],
        corpus: dict[DocId, str],
        tokens: dict[str, str],
        admin_token: str,
        assignment_by_topic: dict[TopicId, tuple[str, str]] | None = None,
        config: ServiceConfig | None = None,
        seed: int = 0,
        clock: Callable[[], str] = _utc_now,
    ):
        for annotator, task_list in tasks.items():
            for topic, doc in task_list:
                if doc not in corpus:
                    raise ConfigurationError(
                        f"task {topic}/{doc} for {annotator} has no document text"
                    )
        self.config = config or ServiceConfig()
        self.titles = dict(titles)
        self.corpus = dict(corpus)
        self.tokens = dict(tokens)
        self.admin_token = admin_token
        self.clock = clock
        self._task_sets = {a: set(t) for a, t in tasks.items()}
        self._topics_of = {
            a: sorted({topic for topic, _ in t}) for a, t in tasks.items()
        }
        if assignment_by_topic is None:
            assignment_by_topic = {}
        self._owners_of_topic: dict[TopicId, set[str]] = {}
        for annotator, topics in self._topics_of.items():
            for topic in topics:
                self._owners_of_topic.setdefault(topic, set()).add(annotator)
        for topic, pair in assignment_by_topic.items():
            self._owners_of_topic.setdefault(topic, set()).update(pair)
        self._queues = {
            annotator: self._shuffled(annotator, task_list, seed)
            for annotator, task_list in tasks.items()
        }
        # judged state and narratives are rebuilt from the log on startup
        self._judged: dict[str, dict[tuple[TopicId, DocId], int]] = {
            a: {} for a in tasks
        }
        self._narratives: dict[str, list[NarrativeEvent]] = {}
        self._flags: list[FlagEvent] = []
        for event in recover_log(log_path):
            self._apply(event)
        self.log = EventLog(log_path)
        # single-writer append discipline: commits are serialized
        self._write_lock = threading.Lock()

    @staticmethod
    def _shuffled(
        annotator: str, task_list: list[tuple[TopicId, DocId]], seed: int
    ) -> list[tuple[TopicId, DocId]]:
        # one shuffle per annotator so primary pooling order leaks minimally
        queue = list(task_list)
        random.Random(f"{seed}|{annotator}").shuffle(queue)
        return queue

    # -- identity -----------------------------------------------------------

    def annotator_for_token(self, token: str) -> str | None:
        for annotator, known in self.tokens.items():
            if known == token:
                return annotator
        return None

    def is_admin(self, token: str) -> bool:
        return token == self.admin_token

    def _require_annotator(self, annotator: str) -> None:
        if annotator not in self._queues:
            raise UnknownAnnotatorError(f"unknown annotator {annotator!r}")

    # -- event application ----------------------------------------------------

    def _apply(self, event: AnnotationEvent) -> None:
        if isinstance(event, JudgmentEvent):
            self._judged.setdefault(event.annotator, {})[
                (event.topic, event.doc)
            ] = event.grade
        elif isinstance(event, NarrativeEvent):
            self._narratives.setdefault(event.annotator, []).append(event)
        elif isinstance(event, FlagEvent):
            self._flags.append(event)

    def _commit(self, event: AnnotationEvent) -> None:
        with self._write_lock:
            self.log.append(event)  # durable before any state change or ack
            self._apply(event)

    # -- task flow ------------------------------------------------------------

    def next_task(self, annotator: str) -> Task | None:
        """Lowest-position unjudged task of the annotator's shuffled queue."""
        self._require_annotator(annotator)
        judged = self._judged.get(annotator, {})
        total = len(self._queues[annotator])
        for position, (topic, doc) in enumerate(self._queues[annotator], start=1):
            if (topic, doc) not in judged:
                return Task(
                    annotator=annotator,
                    topic=topic,
                    title=self.titles.get(topic, topic),
                    doc=doc,
                    text=self.corpus[doc],
                    position=position,
                    remaining=total - len(judged),
                )
        return None

    def submit_judgment(
        self, annotator: str, topic: TopicId, doc: DocId, grade: int
    ) -> dict:
        self._require_annotator(annotator)
        if not isinstance(grade, int) or not (GRADE_MIN <= grade <= GRADE_MAX):
            raise ValidationError(f"grade must be an integer in 0..3, got {grade!r}")
        if (topic, doc) not in self._task_sets[annotator]:
            raise OwnershipError(f"{topic}/{doc} is not assigned to {annotator}")
        event = JudgmentEvent(
            annotator=annotator, topic=topic, doc=doc, grade=grade,
            timestamp=self.clock(),
        )
        self._commit(event)
        return {"ok": True, "progress": self.progress(annotator)}

    def submit_narrative(self, annotator: str, topic: TopicId, text: str) -> dict:
        self._require_annotator(annotator)
        if not text or not text.strip():
            raise ValidationError("narrative text must be non-empty")
        if annotator not in self._owners_of_topic.get(topic, set()):
            raise OwnershipError(f"topic {topic} is not assigned to {annotator}")
        event = NarrativeEvent(
            annotator=annotator, topic=topic, narrative_text=text,
            timestamp=self.clock(),
        )
        self._commit(event)
        versions = [
            e for e in self._narratives.get(annotator, []) if e.topic == topic
        ]
        return {"ok": True, "version": len(versions)}

    def submit_flag(
        self, annotator: str, topic: TopicId, note: str, doc: DocId | None = None
    ) -> dict:
        self._require_annotator(annotator)
        if not note or not note.strip():
            raise ValidationError("flag note must be non-empty")
        if annotator not in self._owners_of_topic.get(topic, set()):
            raise OwnershipError(f"topic {topic} is not assigned to {annotator}")
        event = FlagEvent(
            annotator=annotator, topic=topic, doc=doc, note=note,
            timestamp=self.clock(),
        )
        self._commit(event)
        return {"ok": True}

    # -- progress and views ----------------------------------------------------

    def progress(self, annotator: str) -> dict:
        self._require_annotator(annotator)
        judged = self._judged.get(annotator, {})
        queue = self._queues[annotator]
        per_topic: dict[TopicId, dict[str, int]] = {}
        for topic, doc in queue:
            bucket = per_topic.setdefault(topic, {"total": 0, "judged": 0})
            bucket["total"] += 1
            if (topic, doc) in judged:
                bucket["judged"] += 1
        return {
            "annotator": annotator,
            "judged": len(judged),
            "total": len(queue),
            "per_topic": per_topic,
        }

    def latest_narrative(self, annotator: str, topic: TopicId) -> str | None:
        versions = [
            e for e in self._narratives.get(annotator, []) if e.topic == topic
        ]
        return versions[-1].narrative_text if versions else None

    def topics_view(self, annotator: str) -> list[dict]:
        self._require_annotator(annotator)
        progress = self.progress(annotator)["per_topic"]
        view = []
        for topic in self._topics_of[annotator]:
            view.append(
                {
                    "topic": topic,
                    "title": self.titles.get(topic, topic),
                    "total": progress.get(topic, {}).get("total", 0),
                    "judged": progress.get(topic, {}).get("judged", 0),
                    "narrative": self.latest_narrative(annotator, topic),
                }
            )
        return view

    # -- export -----------------------------------------------------------------

    def export_annotations(self) -> dict[str, AnnotationSet]:
        """Per-annotator sets folded from the log (pure function of it)."""
        sets = {}
        for annotator, judged in self._judged.items():
            if judged:
                sets[annotator] = AnnotationSet(
                    annotator=annotator,
                    judgments=dict(judged),
                    provenance="secondary",
                )
        return sets

    def export_narratives(self) -> list[NarrativeEvent]:
        return [e for events in self._narratives.values() for e in events]

    def export_flags(self) -> list[FlagEvent]:
        return list(self._flags)

    def close(self) -> None:
        self.log.close()
