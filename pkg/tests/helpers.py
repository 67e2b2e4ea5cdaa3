"""Small constructors shared across test modules."""

from __future__ import annotations

from shelflife.trec_io import AnnotationSet, Run, RunEntry


def make_run(tag: str, rankings: dict[str, list[str]]) -> Run:
    """Run with the given per-topic doc order; scores strictly decreasing."""
    by_topic = {}
    for topic, docs in rankings.items():
        n = len(docs)
        by_topic[topic] = [
            RunEntry(topic=topic, doc=doc, rank=i, score=float(n - i + 1), tag=tag)
            for i, doc in enumerate(docs, start=1)
        ]
    return Run(tag=tag, by_topic=by_topic)


def make_set(
    judgments: dict[tuple[str, str], int], annotator: str = "a",
    provenance: str = "primary",
) -> AnnotationSet:
    return AnnotationSet(
        annotator=annotator, judgments=dict(judgments), provenance=provenance
    )
