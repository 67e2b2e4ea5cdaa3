"""Graded effectiveness metrics for runs against judgment sets.

Supports nDCG@k, P@k, MRR@k, and R@k over integer or fractional grades,
with optional judged-only filtering. Gains are linear (g = grade) by
default; exponential gain (2^grade - 1) is available as an option.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import FormatError, NoOverlapError
from .trec_io import AnnotationSet, DocId, GradeValue, Run, RunEntry, TopicId

METRIC_KINDS = ("ndcg", "precision", "mrr", "recall")

_KIND_ALIASES = {
    "ndcg": "ndcg",
    "p": "precision",
    "precision": "precision",
    "mrr": "mrr",
    "r": "recall",
    "recall": "recall",
}

_SHORT_NAMES = {"ndcg": "ndcg", "precision": "p", "mrr": "mrr", "recall": "r"}


@dataclass(frozen=True)
class MetricId:
    kind: str
    k: int

    def __post_init__(self) -> None:
        if self.kind not in METRIC_KINDS:
            raise FormatError(f"unknown metric kind {self.kind!r}")
        if self.k < 1:
            raise FormatError(f"metric cutoff must be >= 1, got {self.k}")

    @classmethod
    def parse(cls, text: str) -> "MetricId":
        """Parse identifiers like ``ndcg@10``, ``p@10``, ``mrr@10``, ``r@100``."""
        name, sep, cutoff = text.strip().lower().partition("@")
        if not sep or name not in _KIND_ALIASES:
            raise FormatError(f"cannot parse metric {text!r}")
        try:
            k = int(cutoff)
        except ValueError:
            raise FormatError(f"cannot parse metric cutoff in {text!r}") from None
        return cls(kind=_KIND_ALIASES[name], k=k)

    def __str__(self) -> str:
        return f"{_SHORT_NAMES[self.kind]}@{self.k}"


@dataclass(frozen=True)
class MetricOptions:
    """Evaluation options.

    ``binary_threshold`` marks a doc relevant iff grade >= threshold; it
    drives P/MRR/R and fractional-grade binarization. ``judged_only``
    removes unjudged docs from the run before scoring.
    """

    gain: str = "linear"
    binary_threshold: float = 2.0
    judged_only: bool = False

    def __post_init__(self) -> None:
        if self.gain not in ("linear", "exponential"):
            raise FormatError(f"unknown gain {self.gain!r}")
        if not (0 < self.binary_threshold <= 3):
            raise FormatError(
                f"binary_threshold must be in (0, 3], got {self.binary_threshold}"
            )


@dataclass
class EffectivenessReport:
    tag: str
    metric: MetricId
    per_topic: dict[TopicId, float] = field(default_factory=dict)
    mean: float = 0.0


def _gain(grade: GradeValue, mode: str) -> float:
    value = float(grade) if isinstance(grade, Fraction) else grade
    if mode == "linear":
        return float(value)
    return 2.0**value - 1.0


def _discount(position: int) -> float:
    return math.log2(position + 1)


def _dcg(grades_in_rank_order: list[float], k: int) -> float:
    return sum(
        g / _discount(i) for i, g in enumerate(grades_in_rank_order[:k], start=1)
    )


def filter_judged_only(run: Run, judgments: AnnotationSet) -> Run:
    """Remove unjudged docs per topic, renumbering ranks contiguously."""
    judged_by_topic: dict[TopicId, set[DocId]] = {}
    for topic, doc in judgments.judgments:
        judged_by_topic.setdefault(topic, set()).add(doc)
    by_topic: dict[TopicId, list[RunEntry]] = {}
    for topic, entries in run.by_topic.items():
        judged = judged_by_topic.get(topic, set())
        kept = [e for e in entries if e.doc in judged]
        by_topic[topic] = [
            RunEntry(topic=topic, doc=e.doc, rank=i, score=e.score, tag=run.tag)
            for i, e in enumerate(kept, start=1)
        ]
    return Run(tag=run.tag, by_topic=by_topic)


def topic_value(
    metric: MetricId,
    opts: MetricOptions,
    ranking: list[DocId],
    judged: dict[DocId, GradeValue],
) -> float | None:
    """Metric value for one topic, or None when the topic is skipped.

    Recall and MRR skip topics without relevant judged docs; nDCG scores 0
    when the ideal gain is 0 (topic still counted); precision always counts.
    """
    k = metric.k
    if opts.judged_only:
        ranking = [d for d in ranking if d in judged]
    top = ranking[:k]
    if metric.kind == "ndcg":
        gains = [_gain(judged[d], opts.gain) if d in judged else 0.0 for d in top]
        ideal = sorted((_gain(g, opts.gain) for g in judged.values()), reverse=True)
        idcg = _dcg(ideal, k)
        if idcg <= 0.0:
            return 0.0
        return _dcg(gains, k) / idcg
    threshold = opts.binary_threshold
    relevant = {d for d, g in judged.items() if float(g) >= threshold}
    if metric.kind == "precision":
        hits = sum(1 for d in top if d in relevant)
        return hits / k
    if not relevant:
        return None  # skipped for recall and MRR
    if metric.kind == "mrr":
        for position, doc in enumerate(top, start=1):
            if doc in relevant:
                return 1.0 / position
        return 0.0
    # recall
    hits = sum(1 for d in top if d in relevant)
    return hits / len(relevant)


def compute_metric(
    run: Run,
    judgments: AnnotationSet,
    metric: MetricId,
    opts: MetricOptions = MetricOptions(),
) -> EffectivenessReport:
    """Evaluate one run under one metric.

    The evaluated topic set is the judged topic set; a judged topic missing
    from the run scores as an empty ranking, keeping the topic domain
    identical across systems. Topics absent from the judgments are ignored.
    """
    judged_topics = judgments.topics()
    if not judged_topics:
        raise NoOverlapError("judgment set is empty")
    if not set(judged_topics) & set(run.by_topic):
        raise NoOverlapError(
            f"run {run.tag!r} and judgments share no topics"
        )
    per_topic: dict[TopicId, float] = {}
    for topic in judged_topics:
        judged = judgments.by_topic(topic)
        ranking = run.ranking(topic)
        value = topic_value(metric, opts, ranking, judged)
        if value is not None:
            per_topic[topic] = value
    mean = sum(per_topic.values()) / len(per_topic) if per_topic else 0.0
    return EffectivenessReport(tag=run.tag, metric=metric, per_topic=per_topic, mean=mean)


def evaluate_systems(
    runs: list[Run],
    judgments: AnnotationSet,
    metrics: list[MetricId],
    opts: MetricOptions = MetricOptions(),
) -> list[EffectivenessReport]:
    """One report per (run, metric), ordered by (tag, metric)."""
    if not runs or not metrics:
        raise FormatError("need at least one run and one metric")
    reports = [
        compute_metric(run, judgments, metric, opts)
        for run in runs
        for metric in metrics
    ]
    reports.sort(key=lambda r: (r.tag, str(r.metric)))
    return reports


def reports_to_csv(reports: list[EffectivenessReport]) -> str:
    """CSV export: tag, metric, topic (``ALL`` row carries the mean), value."""
    lines = ["tag,metric,topic,value"]
    for report in sorted(reports, key=lambda r: (r.tag, str(r.metric))):
        for topic in sorted(report.per_topic):
            lines.append(
                f"{report.tag},{report.metric},{topic},{report.per_topic[topic]:.6f}"
            )
        lines.append(f"{report.tag},{report.metric},ALL,{report.mean:.6f}")
    return "\n".join(lines) + "\n"
