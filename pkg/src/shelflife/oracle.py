"""Annotators as rankers: oracle runs built from judgment sets.

An oracle run lists, per topic, exactly the docs the source set judged,
sorted by grade descending; ties within a grade are broken by a seeded
shuffle. Evaluating an oracle run against its own source is the ideal
ranking, so nDCG is 1 wherever the ideal gain is positive.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from statistics import mean as _mean, pstdev

from .errors import InsufficientDataError
from .metrics import MetricId, MetricOptions, compute_metric
from .stability import paired_t_test_bonferroni
from .trec_io import AnnotationSet, Run, RunEntry

Seed = int | str


def _rng(seed: Seed, *parts: object) -> random.Random:
    return random.Random("|".join([str(seed), *map(str, parts)]))


def build_oracle_run(source: AnnotationSet, tag: str, seed: Seed = 0) -> Run:
    """Rank each topic's judged docs by grade descending.

    Docs sharing a grade are shuffled with a per-topic seeded generator;
    synthetic scores (n - rank + 1) keep exports valid TREC runs whose
    normalization preserves this order.
    """
    if not source.judgments:
        raise InsufficientDataError("cannot build an oracle run from an empty set")
    by_topic = {}
    for topic in source.topics():
        judged = source.by_topic(topic)
        grades = sorted({g for g in judged.values()}, reverse=True)
        ordered = []
        shuffler = _rng(seed, topic)
        for grade in grades:
            group = sorted(d for d, g in judged.items() if g == grade)
            shuffler.shuffle(group)
            ordered.extend(group)
        n = len(ordered)
        by_topic[topic] = [
            RunEntry(topic=topic, doc=doc, rank=i, score=float(n - i + 1), tag=tag)
            for i, doc in enumerate(ordered, start=1)
        ]
    return Run(tag=tag, by_topic=by_topic)


def oracle_stability(
    source: AnnotationSet,
    eval_set: AnnotationSet,
    metric: MetricId,
    opts: MetricOptions = MetricOptions(),
    n_shuffles: int = 10,
    seed: Seed = 0,
) -> tuple[float, float]:
    """Mean and population SD of the metric mean over in-grade re-shuffles.

    Repetition seeds derive from (seed, repetition index), so runs are
    reproducible and individually reconstructible.
    """
    if n_shuffles < 2:
        raise InsufficientDataError("stability estimate needs n_shuffles >= 2")
    means = []
    for rep in range(n_shuffles):
        run = build_oracle_run(source, tag="oracle", seed=f"{seed}|{rep}")
        means.append(compute_metric(run, eval_set, metric, opts).mean)
    return _mean(means), pstdev(means)


# ---------------------------------------------------------------------------
# system-vs-aggregate comparison table


@dataclass
class OracleTableRow:
    section: str  # judged_and_unjudged | judged_only | aggregate
    label: str
    metric: str
    mean: float
    per_topic_std: float
    significant_vs: str  # letters of aggregates this row differs from


def _per_topic_std(per_topic: dict[str, float]) -> float:
    values = list(per_topic.values())
    return pstdev(values) if len(values) > 1 else 0.0


def _significance_letters(
    row_report, aggregate_reports: list, letters: str
) -> str:
    """Bonferroni-corrected paired t-tests against each aggregate oracle,
    paired over the topics both reports scored."""
    flags = []
    m = len(aggregate_reports)
    for letter, agg_report in zip(letters, aggregate_reports):
        shared = sorted(row_report.per_topic.keys() & agg_report.per_topic.keys())
        if len(shared) < 2:
            continue
        result = paired_t_test_bonferroni(
            [row_report.per_topic[t] for t in shared],
            [agg_report.per_topic[t] for t in shared],
            m_comparisons=m,
        )
        if result.significant:
            flags.append(letter)
    return "".join(flags)


def oracle_comparison_table(
    runs: list[Run],
    aggregate_sets: list[tuple[str, AnnotationSet]],
    official: AnnotationSet,
    metrics: list[MetricId],
    opts: MetricOptions = MetricOptions(),
    seed: Seed = 0,
) -> list[OracleTableRow]:
    """Systems vs aggregate-annotation oracles under the official judgments.

    System rows appear twice (unfiltered and judged-only); aggregate rows
    are oracle runs of each aggregate set. Significance letters mark
    aggregates whose per-topic values differ by a Bonferroni-corrected
    paired t-test.
    """
    letters = "ABCDEFGHIJ"[: len(aggregate_sets)]
    rows: list[OracleTableRow] = []
    judged_only_opts = MetricOptions(
        gain=opts.gain, binary_threshold=opts.binary_threshold, judged_only=True
    )
    oracle_runs = [
        (label, build_oracle_run(agg, tag=f"oracle-{label}", seed=seed))
        for label, agg in aggregate_sets
    ]
    for metric in metrics:
        aggregate_reports = [
            compute_metric(run, official, metric, judged_only_opts)
            for _, run in oracle_runs
        ]
        for run in runs:
            for section, section_opts in (
                ("judged_and_unjudged", opts),
                ("judged_only", judged_only_opts),
            ):
                report = compute_metric(run, official, metric, section_opts)
                rows.append(
                    OracleTableRow(
                        section=section,
                        label=run.tag,
                        metric=str(metric),
                        mean=report.mean,
                        per_topic_std=_per_topic_std(report.per_topic),
                        significant_vs=_significance_letters(
                            report, aggregate_reports, letters
                        ),
                    )
                )
        for (label, _), report in zip(oracle_runs, aggregate_reports):
            rows.append(
                OracleTableRow(
                    section="aggregate",
                    label=label,
                    metric=str(metric),
                    mean=report.mean,
                    per_topic_std=_per_topic_std(report.per_topic),
                    significant_vs="",
                )
            )
    return rows


def oracle_table_csv(rows: list[OracleTableRow]) -> str:
    lines = ["section,model,metric,mean,per_topic_std,significant_vs"]
    for row in rows:
        lines.append(
            f"{row.section},{row.label},{row.metric},"
            f"{row.mean:.6f},{row.per_topic_std:.6f},{row.significant_vs}"
        )
    return "\n".join(lines) + "\n"
