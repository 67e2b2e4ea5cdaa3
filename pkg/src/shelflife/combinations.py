"""Per-topic annotator-choice combinations and their realization.

A combination picks, for every topic, which available annotation set
supplies that topic's judgments; realizing it yields one hypothetical
judgment set. With c_t choices on each of m topics there are prod(c_t)
distinct combinations (3^m with a primary and two secondaries per topic).
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product
from math import prod
from typing import Iterator

from .errors import CoverageError, EnumerationTooLargeError, FormatError
from .trec_io import AnnotationSet, GradeValue, TopicId

# Refuse exhaustive enumeration past a signed-64-bit count; sample instead.
MAX_ENUMERABLE = 2**63 - 1

MODES = ("in_sample", "natural")


@dataclass(frozen=True)
class CombinationSpec:
    """topic -> index of the annotation set supplying that topic."""

    choice: dict[TopicId, int]

    def __hash__(self) -> int:  # allow dedup in tests
        return hash(tuple(sorted(self.choice.items())))


@dataclass(frozen=True)
class SampleConfig:
    s: int = 10000
    seed: int = 0
    mode: str = "in_sample"

    def __post_init__(self) -> None:
        if self.s < 1:
            raise FormatError(f"sample count must be >= 1, got {self.s}")
        if self.mode not in MODES:
            raise FormatError(f"unknown mode {self.mode!r}")


def count_combinations(choices_per_topic: dict[TopicId, int]) -> int:
    """Closed-form combination count: product of per-topic choice counts."""
    for topic, count in choices_per_topic.items():
        if count < 1:
            raise CoverageError(f"topic {topic!r} has no available choices")
    return prod(choices_per_topic.values())


def enumerate_combinations(
    topics: list[TopicId], choices_per_topic: dict[TopicId, int]
) -> Iterator[CombinationSpec]:
    """Yield every distinct spec once, lexicographic over sorted topics.

    The first spec is all-index-0 and the last all-max. Enumeration is
    lazy, but counts beyond 2^63 - 1 are refused up front: sample instead.
    """
    ordered = sorted(topics)
    counts = [choices_per_topic[t] for t in ordered]
    if any(c < 1 for c in counts):
        raise CoverageError("every topic needs at least one choice")
    total = prod(counts)
    if total > MAX_ENUMERABLE:
        raise EnumerationTooLargeError(
            f"{total} combinations exceed the enumerable range; "
            "use sample_combinations"
        )

    def generate() -> Iterator[CombinationSpec]:
        for indices in product(*(range(c) for c in counts)):
            yield CombinationSpec(choice=dict(zip(ordered, indices)))

    return generate()


def sample_combinations(
    cfg: SampleConfig,
    topics: list[TopicId],
    choices_per_topic: dict[TopicId, int],
) -> list[CombinationSpec]:
    """Draw cfg.s specs with uniform independent per-topic choices.

    Sampling is with replacement (duplicates allowed) and fully determined
    by (seed, s, topics), so downstream swap probabilities are unbiased.
    """
    ordered = sorted(topics)
    for topic in ordered:
        if choices_per_topic.get(topic, 0) < 1:
            raise CoverageError(f"topic {topic!r} has no available choices")
    rng = random.Random(cfg.seed)
    specs = []
    for _ in range(cfg.s):
        choice = {t: rng.randrange(choices_per_topic[t]) for t in ordered}
        specs.append(CombinationSpec(choice=choice))
    return specs


def available_sets_per_topic(
    primary: AnnotationSet,
    secondaries: list[AnnotationSet],
    mode: str = "in_sample",
    topics: list[TopicId] | None = None,
) -> dict[TopicId, list[AnnotationSet]]:
    """Per-topic candidate sets: the secondaries that judged the topic,
    preceded by the primary in in_sample mode."""
    if mode not in MODES:
        raise FormatError(f"unknown mode {mode!r}")
    wanted = set(topics) if topics is not None else set(primary.topics())
    result: dict[TopicId, list[AnnotationSet]] = {}
    for topic in sorted(wanted):
        candidates: list[AnnotationSet] = []
        if mode == "in_sample":
            candidates.append(primary)
        candidates.extend(s for s in secondaries if s.by_topic(topic))
        if candidates:
            result[topic] = candidates
    return result


def realize_combination(
    spec: CombinationSpec, sets_per_topic: dict[TopicId, list[AnnotationSet]]
) -> AnnotationSet:
    """Concrete judgment set: each topic's judgments from its chosen set."""
    missing = sets_per_topic.keys() ^ spec.choice.keys()
    if missing:
        raise CoverageError(f"spec and sets disagree on topics: {sorted(missing)}")
    judgments: dict[tuple[TopicId, str], GradeValue] = {}
    for topic, index in spec.choice.items():
        candidates = sets_per_topic[topic]
        if not 0 <= index < len(candidates):
            raise CoverageError(
                f"topic {topic!r}: choice {index} out of range ({len(candidates)} sets)"
            )
        for doc, grade in candidates[index].by_topic(topic).items():
            judgments[(topic, doc)] = grade
    return AnnotationSet(
        annotator="combination", judgments=judgments, provenance="aggregate"
    )


def specs_to_csv(
    specs: list[CombinationSpec],
    sets_per_topic: dict[TopicId, list[AnnotationSet]],
) -> str:
    """Audit export: sample, topic, chosen annotator id."""
    lines = ["sample,topic,annotator"]
    for i, spec in enumerate(specs):
        for topic in sorted(spec.choice):
            chosen = sets_per_topic[topic][spec.choice[topic]]
            lines.append(f"{i},{topic},{chosen.annotator}")
    return "\n".join(lines) + "\n"
