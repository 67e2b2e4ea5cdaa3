"""Secondary-pool construction and balanced topic assignment.

The secondary pool keeps, per topic, every doc the primary annotator graded
at or above a cutoff (shared by both assigned annotators) plus an
independent per-annotator sample of grade-0 docs. Topics are then assigned
to annotator pairs largest-first via a least-loaded priority queue, followed
by a balancing pass that moves large topics off overloaded pairs.
"""

from __future__ import annotations

import heapq
import random
import warnings
from dataclasses import dataclass, field

from .errors import ConfigurationError
from .trec_io import AnnotationSet, DocId, TopicId


@dataclass(frozen=True)
class PoolConfig:
    nonrel_sample_per_annotator: int = 100
    seed: int = 0
    min_grade_included: int = 1

    def __post_init__(self) -> None:
        if self.nonrel_sample_per_annotator < 0:
            raise ConfigurationError("sample size must be >= 0")
        if not 0 <= self.min_grade_included <= 3:
            raise ConfigurationError("min_grade_included must be a grade")


@dataclass
class TopicPool:
    """One topic's secondary pool: shared core + two per-annotator samples."""

    topic: TopicId
    core: list[DocId]
    samples: tuple[list[DocId], list[DocId]]

    def per_annotator_size(self) -> int:
        return len(self.core) + len(self.samples[0])


@dataclass
class Assignment:
    pairs: list[tuple[str, str]]
    by_topic: dict[TopicId, tuple[str, str]]
    loads: dict[str, int] = field(default_factory=dict)


def _topic_rng(seed: int, topic: TopicId) -> random.Random:
    return random.Random(f"{seed}|{topic}")


def build_secondary_pool(
    primary: AnnotationSet, cfg: PoolConfig = PoolConfig()
) -> dict[TopicId, TopicPool]:
    """Per topic: core docs graded >= cutoff plus two independent uniform
    samples (without replacement) from the grade-0 docs.

    Samples are truncated with a warning when a topic has fewer grade-0
    docs than requested; identical seeds yield identical pools.
    """
    if not primary.judgments:
        raise ConfigurationError("primary set is empty")
    pools = {}
    for topic in primary.topics():
        judged = primary.by_topic(topic)
        core = sorted(d for d, g in judged.items() if g >= cfg.min_grade_included)
        nonrel = sorted(d for d, g in judged.items() if g == 0)
        want = cfg.nonrel_sample_per_annotator
        take = min(want, len(nonrel))
        if take < want:
            warnings.warn(
                f"topic {topic}: only {len(nonrel)} grade-0 docs for a "
                f"{want}-doc sample; truncating",
                stacklevel=2,
            )
        rng = _topic_rng(cfg.seed, topic)
        samples = (rng.sample(nonrel, take), rng.sample(nonrel, take))
        pools[topic] = TopicPool(topic=topic, core=core, samples=samples)
    return pools


def pool_sizes(pools: dict[TopicId, TopicPool]) -> dict[TopicId, int]:
    return {t: p.per_annotator_size() for t, p in pools.items()}


def _fixed_pairs(annotators: list[str]) -> list[tuple[str, str]]:
    if len(annotators) < 2:
        raise ConfigurationError("need at least 2 annotators")
    if len(annotators) % 2 != 0:
        raise ConfigurationError("fixed pairing needs an even annotator count")
    if len(set(annotators)) != len(annotators):
        raise ConfigurationError("annotator ids must be unique")
    return [(annotators[i], annotators[i + 1]) for i in range(0, len(annotators), 2)]


def _balance(
    topics_of: list[list[TopicId]],
    sizes: dict[TopicId, int],
    loads: list[int],
    tolerance: float,
) -> None:
    """Move large topics from the most- to the least-loaded pair while the
    load gap exceeds tolerance * mean and a move strictly narrows it."""
    mean_load = sum(loads) / len(loads)
    while True:
        hi = max(range(len(loads)), key=lambda i: (loads[i], i))
        lo = min(range(len(loads)), key=lambda i: (loads[i], i))
        gap = loads[hi] - loads[lo]
        if gap <= tolerance * mean_load or hi == lo:
            return
        moved = False
        for topic in sorted(topics_of[hi], key=lambda t: (-sizes[t], t)):
            size = sizes[topic]
            new_gap = _gap_after_move(loads, hi, lo, size)
            if new_gap < gap:
                topics_of[hi].remove(topic)
                topics_of[lo].append(topic)
                loads[hi] -= size
                loads[lo] += size
                moved = True
                break
        if not moved:
            return


def _gap_after_move(loads: list[int], hi: int, lo: int, size: int) -> int:
    trial = list(loads)
    trial[hi] -= size
    trial[lo] += size
    return max(trial) - min(trial)


def assign_topics(
    topic_sizes: dict[TopicId, int],
    annotators: list[str],
    seed: int = 0,
    pairing: str = "fixed",
    balance_tolerance: float = 0.05,
) -> Assignment:
    """Assign every topic to exactly two annotators with balanced load.

    Fixed pairing (default) forms partnerships from consecutive annotators;
    the rotating mode re-pairs per topic from the two least-loaded
    annotators. Topics are processed largest-first; ties and the queue
    order are deterministic, so the output depends only on the inputs.
    """
    if pairing == "rotating":
        return _assign_rotating(topic_sizes, annotators)
    if pairing != "fixed":
        raise ConfigurationError(f"unknown pairing mode {pairing!r}")
    pairs = _fixed_pairs(annotators)
    ordered_topics = sorted(topic_sizes, key=lambda t: (-topic_sizes[t], t))
    heap = [(0, i) for i in range(len(pairs))]
    heapq.heapify(heap)
    topics_of: list[list[TopicId]] = [[] for _ in pairs]
    for topic in ordered_topics:
        load, index = heapq.heappop(heap)
        topics_of[index].append(topic)
        heapq.heappush(heap, (load + topic_sizes[topic], index))
    loads = [sum(topic_sizes[t] for t in bucket) for bucket in topics_of]
    if any(loads):
        _balance(topics_of, topic_sizes, loads, balance_tolerance)
    by_topic = {}
    annotator_loads = {a: 0 for a in annotators}
    for index, bucket in enumerate(topics_of):
        for topic in bucket:
            by_topic[topic] = pairs[index]
            for annotator in pairs[index]:
                annotator_loads[annotator] += topic_sizes[topic]
    return Assignment(pairs=pairs, by_topic=by_topic, loads=annotator_loads)


def _assign_rotating(
    topic_sizes: dict[TopicId, int], annotators: list[str]
) -> Assignment:
    if len(annotators) < 2:
        raise ConfigurationError("need at least 2 annotators")
    loads = {a: 0 for a in annotators}
    by_topic = {}
    pairs_seen = []
    for topic in sorted(topic_sizes, key=lambda t: (-topic_sizes[t], t)):
        a, b = sorted(annotators, key=lambda x: (loads[x], x))[:2]
        pair = (a, b)
        by_topic[topic] = pair
        if pair not in pairs_seen:
            pairs_seen.append(pair)
        loads[a] += topic_sizes[topic]
        loads[b] += topic_sizes[topic]
    return Assignment(pairs=pairs_seen, by_topic=by_topic, loads=loads)


def task_lists(
    pools: dict[TopicId, TopicPool], assignment: Assignment
) -> dict[str, list[tuple[TopicId, DocId]]]:
    """Per-annotator (topic, doc) task list: shared core plus own sample."""
    tasks: dict[str, list[tuple[TopicId, DocId]]] = {}
    for topic in sorted(assignment.by_topic):
        pool = pools[topic]
        for slot, annotator in enumerate(assignment.by_topic[topic]):
            bucket = tasks.setdefault(annotator, [])
            for doc in pool.core:
                bucket.append((topic, doc))
            for doc in pool.samples[slot]:
                bucket.append((topic, doc))
    return tasks


def assignment_csv(
    pools: dict[TopicId, TopicPool], assignment: Assignment
) -> str:
    lines = ["topic,annotator_a,annotator_b,core_size,sample_size"]
    for topic in sorted(assignment.by_topic):
        a, b = assignment.by_topic[topic]
        pool = pools[topic]
        lines.append(f"{topic},{a},{b},{len(pool.core)},{len(pool.samples[0])}")
    return "\n".join(lines) + "\n"
